#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mbseg/corpus.hpp"
#include "mbseg/pooled.hpp"

namespace mbseg {

enum class Normalization { degree, entropy };

[[nodiscard]] std::string to_string(Normalization n);
[[nodiscard]] Normalization parse_normalization(const std::string& name);

/// One projection score per customer. Customers without observations are
/// marked absent rather than given a sentinel value.
struct ScoreVector {
  std::vector<double> values;
  std::vector<std::uint8_t> present;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] bool is_present(std::size_t i) const { return present.at(i) != 0; }
  [[nodiscard]] std::vector<std::size_t> present_indices() const;
  /// Values of present customers, in customer order.
  [[nodiscard]] std::vector<double> present_values() const;
};

/// m x B projection scores with an explicit observed mask.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(Eigen::MatrixXd values, Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> observed);

  [[nodiscard]] Eigen::Index rows() const { return values_.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return values_.cols(); }
  [[nodiscard]] bool observed(Eigen::Index i, Eigen::Index b) const { return observed_(i, b); }
  /// Throws ValidationError when the entry is missing.
  [[nodiscard]] double at(Eigen::Index i, Eigen::Index b) const;
  [[nodiscard]] bool complete() const { return observed_.all(); }
  [[nodiscard]] std::size_t observed_count() const { return static_cast<std::size_t>(observed_.count()); }
  [[nodiscard]] bool row_empty(Eigen::Index i) const { return !observed_.row(i).any(); }

  /// Raw storage; missing entries hold 0 and must be read through the mask.
  [[nodiscard]] const Eigen::MatrixXd& values() const { return values_; }
  [[nodiscard]] const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask() const { return observed_; }

  [[nodiscard]] ScoreVector column(Eigen::Index b) const;
  /// Keeps only the listed columns.
  [[nodiscard]] ScoreMatrix select_columns(std::span<const Eigen::Index> columns) const;

 private:
  Eigen::MatrixXd values_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> observed_;
};

/// (1/d_i) * sum over observed items of -log f_pool,j(x_ij).
[[nodiscard]] ScoreVector pscore_degree(const PreferenceGraph& graph, const PooledModel& model);

/// sum of -log f_pool,j(x_ij) divided by sum of H(f_pool,j) over the same
/// items. Throws NumericalError when the denominator is below 1e-12.
[[nodiscard]] ScoreVector pscore_entropy(const PreferenceGraph& graph, const PooledModel& model);

[[nodiscard]] ScoreVector pscore(const PreferenceGraph& graph, const PooledModel& model, Normalization normalization);

/// Per-category scores; entry (i, b) is missing when customer i has no
/// observation in category b. `models` holds one pooled model per category.
[[nodiscard]] ScoreMatrix pscore_matrix(const PreferenceGraph& graph, std::span<const PooledModelPtr> models,
                                        Normalization normalization);

/// `customer,category,score` with missing entries omitted.
void write_scores_csv(const PreferenceGraph& graph, const ScoreMatrix& scores, std::ostream& out);

}  // namespace mbseg
