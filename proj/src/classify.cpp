#include "mbseg/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mbseg/error.hpp"

namespace mbseg {

namespace {

constexpr double kHalfTolerance = 1e-9;

void check_open_unit(double beta, const char* what) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ValidationError(std::string(what) + " must lie in (0, 1), got " + std::to_string(beta));
  }
}

void check_centers(const CenterSet& c) {
  if (c.K() < 1 || c.B() < 1) throw ValidationError("center set is empty");
  if (!c.H.allFinite() || (c.H.array() <= 0.0).any()) throw ValidationError("centers must be finite and positive");
}

}  // namespace

double cross_entropy(double beta1, double beta2) {
  check_open_unit(beta1, "cross-entropy argument");
  check_open_unit(beta2, "cross-entropy argument");
  return -beta1 * std::log(beta2) - (1.0 - beta1) * std::log1p(-beta2);
}

double binary_entropy(double beta) { return cross_entropy(beta, beta); }

bool CenterSet::any_degenerate() const { return std::find(degenerate.begin(), degenerate.end(), true) != degenerate.end(); }

CenterSet centers(const Eigen::MatrixXd& alpha, std::span<const double> q) {
  const auto K = alpha.rows();
  const auto B = alpha.cols();
  if (K < 1 || B < 1) throw ValidationError("alpha must be a non-empty K x B matrix");
  if (static_cast<Eigen::Index>(q.size()) != K) throw ValidationError("q must have one entry per segment");
  double total = 0.0;
  for (double v : q) {
    if (!(v > 0.0)) throw ValidationError("segment proportions must be positive");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("segment proportions must sum to 1");

  CenterSet out;
  out.alpha = alpha;
  out.alpha_pool = Eigen::VectorXd::Zero(B);
  out.H.resize(K, B);
  out.degenerate.assign(static_cast<std::size_t>(B), false);
  for (Eigen::Index b = 0; b < B; ++b) {
    for (Eigen::Index k = 0; k < K; ++k) {
      check_open_unit(alpha(k, b), "alpha");
      out.alpha_pool(b) += q[static_cast<std::size_t>(k)] * alpha(k, b);
    }
    const double pool = out.alpha_pool(b);
    out.degenerate[static_cast<std::size_t>(b)] = std::abs(pool - 0.5) <= kHalfTolerance;
    const double h = binary_entropy(pool);
    for (Eigen::Index k = 0; k < K; ++k) out.H(k, b) = cross_entropy(alpha(k, b), pool) / h;
  }
  return out;
}

CenterSet centers(std::span<const double> alpha, std::span<const double> q) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(alpha.size()), 1);
  for (std::size_t k = 0; k < alpha.size(); ++k) a(static_cast<Eigen::Index>(k), 0) = alpha[k];
  return centers(a, q);
}

CenterSet empirical_centers(const ScoreMatrix& scores, const Segmentation& seg) {
  if (static_cast<Eigen::Index>(seg.labels.size()) != scores.rows()) {
    throw ValidationError("segmentation and score matrix cover different customers");
  }
  const Eigen::Index K = seg.K;
  const Eigen::Index B = scores.cols();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(K, B);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(K, B);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const int k = seg.labels[static_cast<std::size_t>(i)];
    if (k == kExcluded) continue;
    for (Eigen::Index b = 0; b < B; ++b) {
      if (!scores.observed(i, b)) continue;
      sum(k, b) += scores.values()(i, b);
      count(k, b) += 1.0;
    }
  }
  if ((count.array() == 0.0).any()) throw NumericalError("a segment has no scores in some category");
  CenterSet out;
  out.H = sum.cwiseQuotient(count);
  out.degenerate.assign(static_cast<std::size_t>(B), false);
  return out;
}

std::vector<int> nn_classify_scalar(const ScoreVector& scores, const CenterSet& c, const ClassifyOptions& options) {
  check_centers(c);
  if (c.B() != 1) throw ValidationError("the scalar classifier needs single-category centers");
  if (c.any_degenerate() && !options.allow_degenerate) {
    throw ValidationError("alpha_pool = 1/2: all centers coincide and segments are not identifiable");
  }
  std::vector<int> labels(scores.size(), kExcluded);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores.is_present(i)) continue;
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < c.K(); ++k) {
      const double d = std::abs(scores.values[i] - c.H(k, 0)) / c.H(k, 0);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    labels[i] = best;
  }
  return labels;
}

std::vector<int> nn_classify_vector(const ScoreMatrix& scores, const CenterSet& c, const ClassifyOptions& options) {
  check_centers(c);
  if (scores.cols() != c.B()) throw ValidationError("score matrix and centers have different category counts");
  if (c.B() == 1 && c.any_degenerate() && !options.allow_degenerate) {
    throw ValidationError("alpha_pool = 1/2: all centers coincide and segments are not identifiable");
  }
  std::vector<int> labels(static_cast<std::size_t>(scores.rows()), kExcluded);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    if (scores.row_empty(i)) continue;
    const bool full = scores.mask().row(i).all();
    if (!full && !options.restrict_to_observed) {
      throw ValidationError("customer " + std::to_string(i) + " has missing categories");
    }
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < c.K(); ++k) {
      double dist = 0.0;
      double norm = 0.0;
      for (Eigen::Index b = 0; b < scores.cols(); ++b) {
        if (!scores.observed(i, b)) continue;
        dist += std::abs(scores.values()(i, b) - c.H(k, b));
        norm += c.H(k, b);
      }
      const double d = dist / norm;
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

SeparationConstants separation_constants(const CenterSet& c) {
  const int K = c.K();
  const int B = c.B();
  if (K < 2) throw ValidationError("separation constants need at least two segments");
  if (c.alpha.rows() != K || c.alpha.cols() != B || c.alpha_pool.size() != B) {
    throw ValidationError("separation constants need the generating parameters");
  }

  SeparationConstants out;
  out.alpha_min = std::min(c.alpha.minCoeff(), 1.0 - c.alpha.maxCoeff());
  out.w.resize(B);
  for (int b = 0; b < B; ++b) {
    const double p = c.alpha_pool(b);
    out.w(b) = std::abs(std::log(p / (1.0 - p)));
  }
  if ((out.w.array() == 0.0).all()) throw ValidationError("every category has alpha_pool = 1/2");

  out.gamma = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    for (int l = k + 1; l < K; ++l) {
      const double g = (out.w.array() * (c.alpha.row(k) - c.alpha.row(l)).transpose().array().abs()).sum();
      out.gamma = std::min(out.gamma, g);
    }
  }
  const double ratio = std::abs(std::log1p(-out.alpha_min) / std::log(out.alpha_min));
  out.Gamma = out.gamma / (2.0 * B) * ratio;

  out.lambda = std::numeric_limits<double>::quiet_NaN();
  out.Lambda = std::numeric_limits<double>::quiet_NaN();
  if (B == 1) {
    if (c.degenerate[0]) throw ValidationError("alpha_pool = 1/2: the scalar margin is undefined");
    std::vector<double> a(c.alpha.data(), c.alpha.data() + K);
    std::sort(a.begin(), a.end());
    out.lambda = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < K; ++k) out.lambda = std::min(out.lambda, a[k + 1] - a[k]);
    if (!(out.lambda > 0.0)) throw ValidationError("segment parameters must be distinct");
    out.Lambda = out.lambda / 2.0 * out.w(0) / std::abs(std::log(out.alpha_min));
  }
  return out;
}

double misclassification(std::span<const int> assigned, std::span<const int> truth) {
  return 1.0 - accuracy(assigned, truth) / 100.0;
}

}  // namespace mbseg
