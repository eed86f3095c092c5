#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace mbseg {

/// Label for customers that never entered clustering (no observations).
inline constexpr int kExcluded = -1;

struct Segmentation {
  std::vector<int> labels;  // 0..K-1, or kExcluded
  Eigen::MatrixXd centers;  // K x d
  double inertia = 0.0;
  int K = 0;
  int restart = 0;     // winning restart
  int iterations = 0;  // Lloyd iterations of the winning restart
  /// Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_trace;
};

struct KMeansConfig {
  int restarts = 10;
  int max_iters = 300;
  double tol = 1e-9;
  std::uint64_t seed = 0;
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` by
/// (inertia, restart index). Points are the rows of `points`.
[[nodiscard]] Segmentation kmeans(const Eigen::MatrixXd& points, int K, const KMeansConfig& config = {});
[[nodiscard]] Segmentation kmeans(std::span<const double> points, int K, const KMeansConfig& config = {});

struct KdeConfig {
  int grid_size = 512;
  double peak_threshold = 1e-3;
};

struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  std::vector<std::size_t> peaks;  // indices into grid
};

/// Silverman-bandwidth Gaussian KDE on a uniform grid over [min - 3h, max + 3h].
[[nodiscard]] DensityEstimate estimate_density(std::span<const double> scores, const KdeConfig& config = {});
/// Number of density peaks.
[[nodiscard]] int estimate_k(std::span<const double> scores, const KdeConfig& config = {});

void write_density_csv(const DensityEstimate& density, std::ostream& out);

enum class AlignMode {
  by_alpha,  // centers are per-segment like-probabilities; order ascending
  by_score,  // centers are 1-D projection scores; order depends on alpha_pool
};

/// Relabels segments so that label order follows ascending alpha (by_alpha)
/// or ascending / descending score centers when alpha_pool < 1/2 / > 1/2
/// (by_score). Throws ValidationError for by_score with alpha_pool = 1/2.
[[nodiscard]] Segmentation align_labels(const Segmentation& segmentation, AlignMode mode, double alpha_pool = 0.0);

/// 100 * fraction of matching labels over customers not marked kExcluded.
[[nodiscard]] double accuracy(std::span<const int> assigned, std::span<const int> truth);

/// Accuracy under the label permutation that maximizes agreement; for
/// evaluating multi-dimensional segmentations that have no natural order.
[[nodiscard]] double best_permutation_accuracy(std::span<const int> assigned, std::span<const int> truth, int K);

}  // namespace mbseg
