#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "mbseg/projection.hpp"

namespace mbseg {

struct AlsConfig {
  double ridge = 1e-6;
  double tol = 1e-8;  // relative objective change
  int max_iters = 500;
  std::uint64_t seed = 0;
};

/// Result of a rank-r factorization scores ~= U V^T on the observed entries.
struct FactorPair {
  Eigen::MatrixXd U;  // m x r customer factors
  Eigen::MatrixXd V;  // B x r category factors
  int rank = 0;
  /// Ridge-regularized objective after each full alternation.
  std::vector<double> objective_trace;
  /// Customers with no observed entry; their factor row is zero.
  std::vector<Eigen::Index> empty_rows;
  bool converged = false;

  [[nodiscard]] Eigen::MatrixXd reconstruct() const { return U * V.transpose(); }
};

/// Sum of squared residuals of `approx` over the observed entries of `scores`.
[[nodiscard]] double observed_squared_error(const ScoreMatrix& scores, const Eigen::MatrixXd& approx);

/// Alternating ridge least squares for
///   min sum_{observed (i,b)} (s_ib - u_i.v_b)^2 + ridge (|U|^2 + |V|^2).
/// V starts i.i.d. uniform(-0.1, 0.1) from the seed; U is solved first.
[[nodiscard]] FactorPair als_factorize(const ScoreMatrix& scores, int rank, const AlsConfig& config = {});

/// Rows of a complete score matrix projected onto its top-K right singular
/// vectors (m x K). Throws ValidationError when entries are missing.
[[nodiscard]] Eigen::MatrixXd spectral_project(const ScoreMatrix& scores, int components);

}  // namespace mbseg
