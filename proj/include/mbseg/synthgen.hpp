#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "mbseg/corpus.hpp"
#include "mbseg/random.hpp"

namespace mbseg {

/// Single-category latent-class population. With `ell` set every customer
/// rates a uniform ell-subset of items; otherwise each edge is kept with probability p.
struct SynthSpecInd {
  std::size_t m = 2000;
  std::size_t n = 100;
  std::vector<double> q;
  std::vector<double> alpha;
  double p = 1.0;
  std::optional<std::size_t> ell;
  std::uint64_t seed = 0;

  [[nodiscard]] int K() const { return static_cast<int>(alpha.size()); }
  [[nodiscard]] nlohmann::json to_json() const;
  static SynthSpecInd from_json(const nlohmann::json& doc);
};

/// Multi-category population: category b has n_b items, every customer rates
/// exactly ell_b of them, with like-probability alpha(z_i, b).
struct SynthSpecCat {
  std::size_t m = 1000;
  std::vector<std::size_t> n_b;
  std::vector<double> q;
  Eigen::MatrixXd alpha;  // K x B
  std::vector<std::size_t> ell_b;
  std::uint64_t seed = 0;

  [[nodiscard]] int K() const { return static_cast<int>(alpha.rows()); }
  [[nodiscard]] int B() const { return static_cast<int>(alpha.cols()); }
  [[nodiscard]] nlohmann::json to_json() const;
  static SynthSpecCat from_json(const nlohmann::json& doc);
};

struct GroundTruth {
  PreferenceGraph graph;
  std::vector<int> z;
  nlohmann::json spec;
};

/// Largest-remainder rounding of m * q_k; leftover units go to the largest
/// remainders, ties to the lowest index.
[[nodiscard]] std::vector<std::size_t> segment_sizes(std::size_t m, std::span<const double> q);

/// Segment labels with exact `segment_sizes`, shuffled.
[[nodiscard]] std::vector<int> random_partition(std::size_t m, std::span<const double> q, RandomStream rng);

/// Gamma-ratio Dirichlet draw.
[[nodiscard]] std::vector<double> sample_dirichlet(std::span<const double> concentration, RandomStream& rng);

[[nodiscard]] GroundTruth gen_lc_ind(const SynthSpecInd& spec);
/// Requires spec.ell.
[[nodiscard]] GroundTruth gen_lc_ind_regular(const SynthSpecInd& spec);
[[nodiscard]] GroundTruth gen_lc_ind_cat(const SynthSpecCat& spec);
/// Dispatches on the "model" field ("lc-ind" or "lc-ind-cat").
[[nodiscard]] GroundTruth generate(const nlohmann::json& spec);

/// m = 2000, n = 100, alpha_k evenly spaced on [0.05, 0.95], q ~ Dirichlet(K + 1), p = 1 - sparsity.
[[nodiscard]] SynthSpecInd sample_table1_model(int K, double sparsity, std::uint64_t seed);

/// `customer,true_segment`.
void write_truth_csv(const GroundTruth& truth, std::ostream& out);

}  // namespace mbseg
