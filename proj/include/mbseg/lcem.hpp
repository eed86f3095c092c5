#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "mbseg/corpus.hpp"

namespace mbseg {

struct EmConfig {
  int restarts = 10;
  int max_iters = 500;
  double tol = 1e-8;  // relative change of the log posterior
  std::uint64_t seed = 0;
  double prior_a = 2.0;  // Beta(a, b) on every alpha_k
  double prior_b = 2.0;
  double prior_dirichlet = 1.5;  // symmetric Dirichlet(c) on q
};

/// Per-customer sufficient statistics of a binary preference graph.
struct CustomerCounts {
  std::vector<double> likes;
  std::vector<double> degree;

  [[nodiscard]] std::size_t size() const { return likes.size(); }
};

[[nodiscard]] CustomerCounts customer_counts(const PreferenceGraph& graph);

struct LatentClassModel {
  int K = 0;
  std::vector<double> q;
  std::vector<double> alpha;
  /// Log posterior (up to the prior normalizers) at the start of each iteration.
  std::vector<double> log_posterior_trace;
  Eigen::MatrixXd responsibilities;  // m x K
  std::vector<std::uint8_t> observed;  // customers with at least one label
  int iterations_run = 0;
  int restart_index = 0;
  bool converged = false;

  [[nodiscard]] double log_posterior() const { return log_posterior_trace.back(); }
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Best-of-restarts MAP EM for the Bernoulli latent-class model.
[[nodiscard]] LatentClassModel em_fit(const PreferenceGraph& graph, int K, const EmConfig& config = {});
[[nodiscard]] LatentClassModel em_fit(const CustomerCounts& counts, int K, const EmConfig& config = {});

/// Fills `resp` with posterior memberships and returns the log-likelihood.
double e_step(const CustomerCounts& counts, const std::vector<double>& q, const std::vector<double>& alpha,
              Eigen::MatrixXd& resp);
/// MAP update of (q, alpha) from responsibilities.
void m_step(const CustomerCounts& counts, const Eigen::MatrixXd& resp, const EmConfig& config, std::vector<double>& q,
            std::vector<double>& alpha);
/// log-likelihood + log Beta priors + log Dirichlet prior, without normalizing constants.
[[nodiscard]] double log_posterior(double log_likelihood, const std::vector<double>& q,
                                   const std::vector<double>& alpha, const EmConfig& config);

/// argmax_k responsibility, ties to the lowest k; customers without labels get kExcluded.
[[nodiscard]] std::vector<int> em_assign(const LatentClassModel& model);

/// sum_k gamma_ik alpha_k.
[[nodiscard]] double mixture_prediction(const LatentClassModel& model, std::size_t customer);

}  // namespace mbseg
