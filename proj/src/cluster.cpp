#include "mbseg/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mbseg/error.hpp"
#include "mbseg/random.hpp"

namespace mbseg {

namespace {

constexpr double kHalfTolerance = 1e-9;

// Row-major copy of the points; d is small (1 for scalar scores, B or r otherwise).
struct PointSet {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> x;

  [[nodiscard]] const double* row(std::size_t i) const { return x.data() + i * d; }
};

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double t = a[c] - b[c];
    s += t * t;
  }
  return s;
}

struct RestartResult {
  std::vector<int> labels;
  std::vector<double> centers;
  double inertia = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> trace;
};

std::vector<double> seed_plus_plus(const PointSet& pts, int K, RandomStream& rng) {
  const std::size_t d = pts.d;
  std::vector<double> centers;
  centers.reserve(static_cast<std::size_t>(K) * d);
  auto add_center = [&](std::size_t idx) { centers.insert(centers.end(), pts.row(idx), pts.row(idx) + d); };

  add_center(rng.below(pts.n));
  std::vector<double> d2(pts.n);
  for (std::size_t i = 0; i < pts.n; ++i) d2[i] = squared_distance(pts.row(i), centers.data(), d);

  for (int k = 1; k < K; ++k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      pick = pts.n - 1;
      for (std::size_t i = 0; i < pts.n; ++i) {
        cum += d2[i];
        if (cum > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(pts.n);
    }
    add_center(pick);
    const double* c = centers.data() + static_cast<std::size_t>(k) * d;
    for (std::size_t i = 0; i < pts.n; ++i) d2[i] = std::min(d2[i], squared_distance(pts.row(i), c, d));
  }
  return centers;
}

RestartResult lloyd(const PointSet& pts, int K, const KMeansConfig& config, double total_ss, RandomStream rng) {
  const std::size_t d = pts.d;
  const auto Ku = static_cast<std::size_t>(K);
  RestartResult r;
  r.centers = seed_plus_plus(pts, K, rng);
  r.labels.assign(pts.n, -1);
  std::vector<std::size_t> counts(Ku);
  std::vector<double> dist(pts.n);

  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < config.max_iters; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < pts.n; ++i) {
      int best = 0;
      double best_d = squared_distance(pts.row(i), r.centers.data(), d);
      for (int k = 1; k < K; ++k) {
        const double dk = squared_distance(pts.row(i), r.centers.data() + static_cast<std::size_t>(k) * d, d);
        if (dk < best_d) {
          best_d = dk;
          best = k;
        }
      }
      dist[i] = best_d;
      if (r.labels[i] != best) {
        r.labels[i] = best;
        changed = true;
      }
    }

    std::fill(counts.begin(), counts.end(), 0);
    for (int l : r.labels) ++counts[static_cast<std::size_t>(l)];
    for (std::size_t k = 0; k < Ku; ++k) {
      if (counts[k] != 0) continue;
      // Refill from the point farthest from its center, taken from a cluster that can spare it.
      std::size_t far = pts.n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < pts.n; ++i) {
        if (counts[static_cast<std::size_t>(r.labels[i])] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      if (far == pts.n) break;
      --counts[static_cast<std::size_t>(r.labels[far])];
      r.labels[far] = static_cast<int>(k);
      counts[k] = 1;
      dist[far] = 0.0;
      changed = true;
    }

    std::fill(r.centers.begin(), r.centers.end(), 0.0);
    for (std::size_t i = 0; i < pts.n; ++i) {
      double* c = r.centers.data() + static_cast<std::size_t>(r.labels[i]) * d;
      const double* p = pts.row(i);
      for (std::size_t c2 = 0; c2 < d; ++c2) c[c2] += p[c2];
    }
    for (std::size_t k = 0; k < Ku; ++k) {
      for (std::size_t c2 = 0; c2 < d; ++c2) r.centers[k * d + c2] /= static_cast<double>(counts[k]);
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < pts.n; ++i) {
      inertia += squared_distance(pts.row(i), r.centers.data() + static_cast<std::size_t>(r.labels[i]) * d, d);
    }
    r.trace.push_back(inertia);
    r.inertia = inertia;
    r.iterations = it + 1;
    if (!changed || previous - inertia <= config.tol * total_ss) break;
    previous = inertia;
  }
  return r;
}

PointSet to_point_set(const Eigen::MatrixXd& points) {
  PointSet pts;
  pts.n = static_cast<std::size_t>(points.rows());
  pts.d = static_cast<std::size_t>(points.cols());
  pts.x.resize(pts.n * pts.d);
  for (std::size_t i = 0; i < pts.n; ++i) {
    for (std::size_t c = 0; c < pts.d; ++c) {
      const double v = points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      if (!std::isfinite(v)) throw ValidationError("kmeans input contains a non-finite value");
      pts.x[i * pts.d + c] = v;
    }
  }
  return pts;
}

Segmentation run_kmeans(const PointSet& pts, int K, const KMeansConfig& config) {
  if (K < 1) throw ValidationError("kmeans needs K >= 1");
  if (static_cast<std::size_t>(K) > pts.n) {
    throw ValidationError("kmeans: K = " + std::to_string(K) + " exceeds the number of points (" +
                          std::to_string(pts.n) + ")");
  }
  if (pts.d == 0) throw ValidationError("kmeans: points have zero dimensions");
  if (config.restarts < 1 || config.max_iters < 1) throw ValidationError("kmeans: restarts and max_iters must be >= 1");

  std::vector<double> mean(pts.d, 0.0);
  for (std::size_t i = 0; i < pts.n; ++i) {
    for (std::size_t c = 0; c < pts.d; ++c) mean[c] += pts.row(i)[c];
  }
  for (double& v : mean) v /= static_cast<double>(pts.n);
  double total_ss = 0.0;
  for (std::size_t i = 0; i < pts.n; ++i) total_ss += squared_distance(pts.row(i), mean.data(), pts.d);

  const RandomStream root = RandomStream(config.seed).split("kmeans");
  RestartResult best;
  int best_restart = -1;
  for (int r = 0; r < config.restarts; ++r) {
    auto result = lloyd(pts, K, config, total_ss, root.split(static_cast<std::uint64_t>(r)));
    if (best_restart < 0 || result.inertia < best.inertia) {
      best = std::move(result);
      best_restart = r;
    }
  }

  Segmentation seg;
  seg.K = K;
  seg.labels = std::move(best.labels);
  seg.inertia = best.inertia;
  seg.restart = best_restart;
  seg.iterations = best.iterations;
  seg.inertia_trace = std::move(best.trace);
  seg.centers.resize(K, static_cast<Eigen::Index>(pts.d));
  for (int k = 0; k < K; ++k) {
    for (std::size_t c = 0; c < pts.d; ++c) {
      seg.centers(k, static_cast<Eigen::Index>(c)) = best.centers[static_cast<std::size_t>(k) * pts.d + c];
    }
  }
  return seg;
}

double quantile(std::vector<double> sorted_values, double p) {
  const double pos = p * static_cast<double>(sorted_values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted_values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

}  // namespace

Segmentation kmeans(const Eigen::MatrixXd& points, int K, const KMeansConfig& config) {
  return run_kmeans(to_point_set(points), K, config);
}

Segmentation kmeans(std::span<const double> points, int K, const KMeansConfig& config) {
  const Eigen::Map<const Eigen::VectorXd> column(points.data(), static_cast<Eigen::Index>(points.size()));
  return run_kmeans(to_point_set(column), K, config);
}

DensityEstimate estimate_density(std::span<const double> scores, const KdeConfig& config) {
  if (scores.size() < 2) throw ValidationError("density estimation needs at least 2 scores");
  if (config.grid_size < 3) throw ValidationError("density grid needs at least 3 points");
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("density input contains a non-finite value");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw NumericalError("all scores are identical; no density to estimate");

  const auto n = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : sorted) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  const double h = 0.9 * spread * std::pow(n, -0.2);
  if (!(h > 0.0)) throw NumericalError("density bandwidth collapsed to zero");

  DensityEstimate out;
  out.bandwidth = h;
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  const auto G = static_cast<std::size_t>(config.grid_size);
  out.grid.resize(G);
  out.density.assign(G, 0.0);
  const double step = (hi - lo) / static_cast<double>(G - 1);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * M_PI));
  for (std::size_t g = 0; g < G; ++g) {
    const double x = lo + step * static_cast<double>(g);
    out.grid[g] = x;
    double acc = 0.0;
    for (double s : sorted) {
      const double z = (x - s) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out.density[g] = acc * norm;
  }

  const double peak = *std::max_element(out.density.begin(), out.density.end());
  for (std::size_t g = 1; g + 1 < G; ++g) {
    const double v = out.density[g];
    if (v > out.density[g - 1] && v > out.density[g + 1] && v >= config.peak_threshold * peak) {
      out.peaks.push_back(g);
    }
  }
  return out;
}

int estimate_k(std::span<const double> scores, const KdeConfig& config) {
  return static_cast<int>(estimate_density(scores, config).peaks.size());
}

void write_density_csv(const DensityEstimate& density, std::ostream& out) {
  out << "score,density\n";
  out.precision(17);
  for (std::size_t g = 0; g < density.grid.size(); ++g) out << density.grid[g] << ',' << density.density[g] << '\n';
}

Segmentation align_labels(const Segmentation& segmentation, AlignMode mode, double alpha_pool) {
  const auto& c = segmentation.centers;
  if (c.cols() != 1) throw ValidationError("label alignment needs one-dimensional centers");
  if (c.rows() != segmentation.K) throw ValidationError("center count does not match K");

  bool ascending = true;
  if (mode == AlignMode::by_score) {
    if (std::abs(alpha_pool - 0.5) <= kHalfTolerance) {
      throw ValidationError("alignment by score is undefined when alpha_pool = 1/2");
    }
    ascending = alpha_pool < 0.5;
  }

  std::vector<int> order(static_cast<std::size_t>(segmentation.K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return ascending ? c(a, 0) < c(b, 0) : c(a, 0) > c(b, 0);
  });
  std::vector<int> new_label(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) new_label[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos);

  Segmentation out = segmentation;
  for (auto& l : out.labels) {
    if (l != kExcluded) l = new_label[static_cast<std::size_t>(l)];
  }
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    out.centers.row(static_cast<Eigen::Index>(pos)) = c.row(order[pos]);
  }
  return out;
}

double accuracy(std::span<const int> assigned, std::span<const int> truth) {
  if (assigned.size() != truth.size()) throw ValidationError("accuracy: label sequences differ in length");
  std::size_t counted = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (assigned[i] == kExcluded) continue;
    ++counted;
    if (assigned[i] == truth[i]) ++hits;
  }
  if (counted == 0) throw ValidationError("accuracy: no assigned customers");
  return 100.0 * static_cast<double>(hits) / static_cast<double>(counted);
}

double best_permutation_accuracy(std::span<const int> assigned, std::span<const int> truth, int K) {
  if (assigned.size() != truth.size()) throw ValidationError("accuracy: label sequences differ in length");
  if (K < 1 || K > 10) throw ValidationError("best_permutation_accuracy supports 1 <= K <= 10");
  const auto Ku = static_cast<std::size_t>(K);
  std::vector<std::size_t> confusion(Ku * Ku, 0);
  std::size_t counted = 0;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (assigned[i] == kExcluded) continue;
    if (assigned[i] < 0 || assigned[i] >= K || truth[i] < 0 || truth[i] >= K) {
      throw ValidationError("accuracy: label out of range");
    }
    ++confusion[static_cast<std::size_t>(assigned[i]) * Ku + static_cast<std::size_t>(truth[i])];
    ++counted;
  }
  if (counted == 0) throw ValidationError("accuracy: no assigned customers");
  std::vector<std::size_t> perm(Ku);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t a = 0; a < Ku; ++a) hits += confusion[a * Ku + perm[a]];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 100.0 * static_cast<double>(best) / static_cast<double>(counted);
}

}  // namespace mbseg
