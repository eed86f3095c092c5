#include "mbseg/lcem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mbseg/cluster.hpp"
#include "mbseg/error.hpp"
#include "mbseg/random.hpp"

namespace mbseg {

namespace {

constexpr double kAlphaClamp = 1e-6;

void validate(const EmConfig& c, int K) {
  if (K < 1) throw ValidationError("EM needs K >= 1");
  if (c.restarts < 1 || c.max_iters < 1) throw ValidationError("EM restarts and max_iters must be >= 1");
  if (c.prior_a < 1.0 || c.prior_b < 1.0 || c.prior_dirichlet < 1.0) {
    throw ValidationError("EM priors must have parameters >= 1");
  }
}

LatentClassModel run_restart(const CustomerCounts& counts, int K, const EmConfig& config, RandomStream rng) {
  LatentClassModel model;
  model.K = K;
  model.alpha.resize(static_cast<std::size_t>(K));
  model.q.resize(static_cast<std::size_t>(K));
  for (auto& a : model.alpha) a = 0.05 + 0.9 * rng.uniform();
  double total = 0.0;
  for (auto& v : model.q) {
    v = -std::log1p(-rng.uniform());
    total += v;
  }
  for (auto& v : model.q) v /= total;

  model.responsibilities.resize(static_cast<Eigen::Index>(counts.size()), K);
  std::vector<double> q_next;
  std::vector<double> alpha_next;
  for (int it = 0; it < config.max_iters; ++it) {
    const double ll = e_step(counts, model.q, model.alpha, model.responsibilities);
    const double lp = log_posterior(ll, model.q, model.alpha, config);
    model.iterations_run = it + 1;
    if (!model.log_posterior_trace.empty()) {
      const double prev = model.log_posterior_trace.back();
      model.log_posterior_trace.push_back(lp);
      if (std::abs(lp - prev) < config.tol * std::max(std::abs(prev), 1e-300)) {
        model.converged = true;
        break;
      }
    } else {
      model.log_posterior_trace.push_back(lp);
    }
    if (it + 1 == config.max_iters) break;
    m_step(counts, model.responsibilities, config, q_next, alpha_next);
    model.q.swap(q_next);
    model.alpha.swap(alpha_next);
  }
  return model;
}

}  // namespace

CustomerCounts customer_counts(const PreferenceGraph& graph) {
  if (!graph.alphabet().is_binary()) throw ValidationError("latent-class EM needs binary labels");
  CustomerCounts c;
  c.likes.resize(graph.customers());
  c.degree.resize(graph.customers());
  for (std::size_t i = 0; i < graph.customers(); ++i) {
    double likes = 0.0;
    for (const auto& obs : graph.row(i)) likes += obs.label == kLike ? 1.0 : 0.0;
    c.likes[i] = likes;
    c.degree[i] = static_cast<double>(graph.degree(i));
  }
  return c;
}

double e_step(const CustomerCounts& counts, const std::vector<double>& q, const std::vector<double>& alpha,
              Eigen::MatrixXd& resp) {
  const std::size_t K = q.size();
  std::vector<double> log_q(K);
  std::vector<double> log_a(K);
  std::vector<double> log_1a(K);
  for (std::size_t k = 0; k < K; ++k) {
    log_q[k] = std::log(q[k]);
    log_a[k] = std::log(alpha[k]);
    log_1a[k] = std::log1p(-alpha[k]);
  }
  resp.resize(static_cast<Eigen::Index>(counts.size()), static_cast<Eigen::Index>(K));
  std::vector<double> w(K);
  double ll = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double L = counts.likes[i];
    const double D = counts.degree[i] - L;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      w[k] = log_q[k] + L * log_a[k] + D * log_1a[k];
      top = std::max(top, w[k]);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      w[k] = std::exp(w[k] - top);
      sum += w[k];
    }
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < K; ++k) resp(ii, static_cast<Eigen::Index>(k)) = w[k] / sum;
    ll += top + std::log(sum);
  }
  return ll;
}

void m_step(const CustomerCounts& counts, const Eigen::MatrixXd& resp, const EmConfig& config, std::vector<double>& q,
            std::vector<double>& alpha) {
  const auto K = static_cast<std::size_t>(resp.cols());
  const double c1 = config.prior_dirichlet - 1.0;
  const double a1 = config.prior_a - 1.0;
  const double b1 = config.prior_b - 1.0;
  std::vector<double> mass(K, 0.0);
  std::vector<double> likes(K, 0.0);
  std::vector<double> degree(K, 0.0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < K; ++k) {
      const double g = resp(ii, static_cast<Eigen::Index>(k));
      mass[k] += g;
      likes[k] += g * counts.likes[i];
      degree[k] += g * counts.degree[i];
    }
  }
  q.resize(K);
  alpha.resize(K);
  const double denom = static_cast<double>(counts.size()) + static_cast<double>(K) * c1;
  for (std::size_t k = 0; k < K; ++k) {
    q[k] = (mass[k] + c1) / denom;
    const double den = degree[k] + a1 + b1;
    // A class with no mass and a flat prior keeps a neutral parameter.
    const double a = den > 0.0 ? (likes[k] + a1) / den : 0.5;
    alpha[k] = std::clamp(a, kAlphaClamp, 1.0 - kAlphaClamp);
  }
}

double log_posterior(double log_likelihood, const std::vector<double>& q, const std::vector<double>& alpha,
                     const EmConfig& config) {
  double lp = log_likelihood;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    lp += (config.prior_a - 1.0) * std::log(alpha[k]) + (config.prior_b - 1.0) * std::log1p(-alpha[k]);
    if (config.prior_dirichlet != 1.0) lp += (config.prior_dirichlet - 1.0) * std::log(q[k]);
  }
  return lp;
}

LatentClassModel em_fit(const CustomerCounts& counts, int K, const EmConfig& config) {
  validate(config, K);
  if (counts.size() == 0) throw ValidationError("EM needs at least one customer");
  double edges = 0.0;
  for (double d : counts.degree) edges += d;
  if (edges == 0.0) throw ValidationError("EM needs at least one observation");

  const RandomStream root = RandomStream(config.seed).split("em");
  LatentClassModel best;
  for (int r = 0; r < config.restarts; ++r) {
    auto model = run_restart(counts, K, config, root.split(static_cast<std::uint64_t>(r)));
    model.restart_index = r;
    if (r == 0 || model.log_posterior() > best.log_posterior()) best = std::move(model);
  }
  best.observed.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) best.observed[i] = counts.degree[i] > 0.0 ? 1 : 0;
  return best;
}

LatentClassModel em_fit(const PreferenceGraph& graph, int K, const EmConfig& config) {
  return em_fit(customer_counts(graph), K, config);
}

std::vector<int> em_assign(const LatentClassModel& model) {
  const auto m = static_cast<std::size_t>(model.responsibilities.rows());
  std::vector<int> labels(m, kExcluded);
  for (std::size_t i = 0; i < m; ++i) {
    if (!model.observed.empty() && !model.observed[i]) continue;
    const auto ii = static_cast<Eigen::Index>(i);
    int best = 0;
    for (int k = 1; k < model.K; ++k) {
      if (model.responsibilities(ii, k) > model.responsibilities(ii, best)) best = k;
    }
    labels[i] = best;
  }
  return labels;
}

double mixture_prediction(const LatentClassModel& model, std::size_t customer) {
  if (customer >= static_cast<std::size_t>(model.responsibilities.rows())) {
    throw ValidationError("customer index out of range");
  }
  double p = 0.0;
  for (int k = 0; k < model.K; ++k) {
    p += model.responsibilities(static_cast<Eigen::Index>(customer), k) * model.alpha[static_cast<std::size_t>(k)];
  }
  return p;
}

nlohmann::json LatentClassModel::to_json() const {
  return {{"K", K},
          {"q", q},
          {"alpha", alpha},
          {"log_posterior_trace", log_posterior_trace},
          {"restart_index", restart_index},
          {"iterations", iterations_run},
          {"converged", converged}};
}

}  // namespace mbseg
