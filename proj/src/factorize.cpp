#include "mbseg/factorize.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "mbseg/error.hpp"
#include "mbseg/random.hpp"

namespace mbseg {

namespace {

double regularized_objective(const ScoreMatrix& scores, const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                             double ridge) {
  return observed_squared_error(scores, U * V.transpose()) + ridge * (U.squaredNorm() + V.squaredNorm());
}

// Solves every row of `target` against the fixed factor `fixed`, using the
// observed entries along that row (rows of `scores` when by_row, columns otherwise).
void solve_half_step(const ScoreMatrix& scores, const Eigen::MatrixXd& fixed, double ridge, bool by_row,
                     Eigen::MatrixXd& target) {
  const Eigen::Index r = fixed.cols();
  const Eigen::Index outer = by_row ? scores.rows() : scores.cols();
  const Eigen::Index inner = by_row ? scores.cols() : scores.rows();
  Eigen::MatrixXd gram(r, r);
  Eigen::VectorXd rhs(r);
  for (Eigen::Index a = 0; a < outer; ++a) {
    gram.setZero();
    rhs.setZero();
    for (Eigen::Index c = 0; c < inner; ++c) {
      const Eigen::Index i = by_row ? a : c;
      const Eigen::Index b = by_row ? c : a;
      if (!scores.observed(i, b)) continue;
      const auto f = fixed.row(c).transpose();
      gram.noalias() += f * f.transpose();
      rhs.noalias() += scores.values()(i, b) * f;
    }
    gram.diagonal().array() += ridge;
    target.row(a) = gram.ldlt().solve(rhs).transpose();
  }
}

// Rescales each column pair to equal norms. U V^T is unchanged and the ridge
// term can only shrink, so the objective stays monotone.
void balance(Eigen::MatrixXd& U, Eigen::MatrixXd& V) {
  for (Eigen::Index k = 0; k < U.cols(); ++k) {
    const double nu = U.col(k).norm();
    const double nv = V.col(k).norm();
    if (nu == 0.0 || nv == 0.0) continue;
    const double c = std::sqrt(nv / nu);
    U.col(k) *= c;
    V.col(k) /= c;
  }
}

}  // namespace

double observed_squared_error(const ScoreMatrix& scores, const Eigen::MatrixXd& approx) {
  if (approx.rows() != scores.rows() || approx.cols() != scores.cols()) {
    throw ValidationError("approximation shape does not match the score matrix");
  }
  double total = 0.0;
  for (Eigen::Index b = 0; b < scores.cols(); ++b) {
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      if (!scores.observed(i, b)) continue;
      const double d = scores.values()(i, b) - approx(i, b);
      total += d * d;
    }
  }
  return total;
}

FactorPair als_factorize(const ScoreMatrix& scores, int rank, const AlsConfig& config) {
  const Eigen::Index m = scores.rows();
  const Eigen::Index B = scores.cols();
  if (m == 0 || B == 0 || scores.observed_count() == 0) throw ValidationError("cannot factorize an empty matrix");
  if (rank < 1 || rank > std::min(m, B)) {
    throw ValidationError("rank must lie in [1, min(m, B)] = [1, " + std::to_string(std::min(m, B)) + "]");
  }
  if (!(config.ridge > 0.0)) throw ValidationError("ridge must be positive");

  FactorPair out;
  out.rank = rank;
  out.U = Eigen::MatrixXd::Zero(m, rank);
  out.V.resize(B, rank);
  RandomStream rng = RandomStream(config.seed).split("als-init");
  for (Eigen::Index b = 0; b < B; ++b) {
    for (Eigen::Index k = 0; k < rank; ++k) out.V(b, k) = -0.1 + 0.2 * rng.uniform();
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (scores.row_empty(i)) out.empty_rows.push_back(i);
  }

  double previous = 0.0;
  for (int it = 0; it < config.max_iters; ++it) {
    solve_half_step(scores, out.V, config.ridge, true, out.U);
    solve_half_step(scores, out.U, config.ridge, false, out.V);
    balance(out.U, out.V);
    const double objective = regularized_objective(scores, out.U, out.V, config.ridge);
    out.objective_trace.push_back(objective);
    if (it > 0) {
      const double change = std::abs(previous - objective) / std::max(previous, 1e-300);
      if (change < config.tol) {
        out.converged = true;
        break;
      }
    }
    previous = objective;
  }
  for (auto i : out.empty_rows) out.U.row(i).setZero();
  return out;
}

Eigen::MatrixXd spectral_project(const ScoreMatrix& scores, int components) {
  if (!scores.complete()) {
    throw ValidationError("spectral projection needs a complete score matrix; use als_factorize for missing entries");
  }
  const Eigen::Index m = scores.rows();
  const Eigen::Index B = scores.cols();
  if (components < 1 || components > std::min(m, B)) {
    throw ValidationError("component count must lie in [1, min(m, B)]");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(scores.values(), Eigen::ComputeThinV);
  return scores.values() * svd.matrixV().leftCols(components);
}

}  // namespace mbseg
