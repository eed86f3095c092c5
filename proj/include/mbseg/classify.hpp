#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mbseg/cluster.hpp"
#include "mbseg/projection.hpp"

namespace mbseg {

/// -b1 ln b2 - (1 - b1) ln(1 - b2); both arguments in (0, 1).
[[nodiscard]] double cross_entropy(double beta1, double beta2);
/// Binary entropy in nats.
[[nodiscard]] double binary_entropy(double beta);

struct CenterSet {
  Eigen::MatrixXd H;      // K x B normalized cross-entropy centers
  Eigen::MatrixXd alpha;  // K x B like-probabilities
  Eigen::VectorXd alpha_pool;
  /// Categories whose pooled parameter is 1/2 (within 1e-9).
  std::vector<bool> degenerate;

  [[nodiscard]] int K() const { return static_cast<int>(H.rows()); }
  [[nodiscard]] int B() const { return static_cast<int>(H.cols()); }
  [[nodiscard]] bool any_degenerate() const;
};

/// H_kb = H(alpha_kb, alpha_pool_b) / H(alpha_pool_b), alpha_pool_b = sum_k q_k alpha_kb.
[[nodiscard]] CenterSet centers(const Eigen::MatrixXd& alpha, std::span<const double> q);
/// Single-category convenience.
[[nodiscard]] CenterSet centers(std::span<const double> alpha, std::span<const double> q);

/// Centers replaced by per-cluster mean scores. Segment order follows `seg.labels`.
[[nodiscard]] CenterSet empirical_centers(const ScoreMatrix& scores, const Segmentation& seg);

struct ClassifyOptions {
  /// Classify even when a pooled parameter is 1/2 (negative controls).
  bool allow_degenerate = false;
  /// Use only the observed coordinates of incomplete rows instead of failing.
  bool restrict_to_observed = false;
};

/// argmin_k |s_i - H_k| / H_k, ties to the lowest k. Absent customers get kExcluded.
[[nodiscard]] std::vector<int> nn_classify_scalar(const ScoreVector& scores, const CenterSet& centers,
                                                  const ClassifyOptions& options = {});
/// argmin_k |s_i - H_k|_1 / |H_k|_1, ties to the lowest k.
[[nodiscard]] std::vector<int> nn_classify_vector(const ScoreMatrix& scores, const CenterSet& centers,
                                                  const ClassifyOptions& options = {});

struct SeparationConstants {
  double lambda = 0.0;  // scalar case only (B = 1), else NaN
  double Lambda = 0.0;  // scalar case only, else NaN
  double gamma = 0.0;
  double Gamma = 0.0;
  double alpha_min = 0.0;
  Eigen::VectorXd w;
};

[[nodiscard]] SeparationConstants separation_constants(const CenterSet& centers);

/// Fraction (0..1) of customers whose label differs from the truth, over non-excluded customers.
[[nodiscard]] double misclassification(std::span<const int> assigned, std::span<const int> truth);

}  // namespace mbseg
