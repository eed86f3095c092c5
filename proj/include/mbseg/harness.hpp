#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "mbseg/classify.hpp"
#include "mbseg/cluster.hpp"
#include "mbseg/corpus.hpp"
#include "mbseg/factorize.hpp"
#include "mbseg/lcem.hpp"
#include "mbseg/pooled.hpp"
#include "mbseg/projection.hpp"
#include "mbseg/synthgen.hpp"

namespace mbseg {

enum class Method { proj, lc };

[[nodiscard]] std::string to_string(Method method);
/// "proj", "lc" or "both".
[[nodiscard]] std::vector<Method> parse_methods(const std::string& name);

struct SegmentConfig {
  std::optional<int> K;  // nullopt: estimate from the density of the scores
  PooledFamily family = PooledFamily::bernoulli;
  Normalization normalization = Normalization::entropy;
  std::optional<int> rank;  // factorization rank for incomplete multi-category scores
  int spectral_components = 0;  // > 0 projects complete multi-category scores
  std::uint64_t seed = 0;
  KMeansConfig kmeans;
  KdeConfig kde;
  AlsConfig als;
};

struct StageTimes {
  double pooled = 0.0;
  double scores = 0.0;
  double factorize = 0.0;
  double cluster = 0.0;

  [[nodiscard]] double total() const { return pooled + scores + factorize + cluster; }
};

struct SegmentResult {
  Segmentation segmentation;  // labels cover every customer; kExcluded for those left out
  bool k_estimated = false;
  std::string representation;  // "scores", "spectral" or "factors"
  std::string alignment;       // "ascending", "descending" or "l1-norm"
  ScoreMatrix scores;
  std::optional<FactorPair> factors;
  std::optional<DensityEstimate> density;
  std::vector<PooledModelPtr> pooled;
  std::optional<double> alpha_pool;  // binary alphabets only
  StageTimes times;

  [[nodiscard]] nlohmann::json to_json(const PreferenceGraph& graph) const;
};

/// Pooled fit, scores, optional factorization or projection, k-means and alignment.
[[nodiscard]] SegmentResult run_segment(const PreferenceGraph& graph, const SegmentConfig& config);

/// Overall like-fraction of a binary graph, unclamped.
[[nodiscard]] double like_fraction(const PreferenceGraph& graph);

/// Writes `customer,segment` with an empty segment for excluded customers.
void write_assignments_csv(const PreferenceGraph& graph, const std::vector<int>& labels, std::ostream& out);

struct Table1Config {
  std::vector<int> Ks = {5, 7, 9};
  std::vector<double> sparsities = {0.0, 0.2, 0.4, 0.6, 0.8};
  int reps = 30;
  std::uint64_t seed = 0;
  std::vector<Method> methods = {Method::lc, Method::proj};
  Normalization normalization = Normalization::entropy;
  KMeansConfig kmeans;
  EmConfig em;
  /// One q per (K, sparsity) cell (false) or a fresh q for every instance (true).
  bool resample_q = false;
};

struct Table1Cell {
  int K = 0;
  double sparsity = 0.0;
  Method method = Method::proj;
  std::vector<double> accuracy;  // one entry per rep
  std::vector<double> seconds;

  [[nodiscard]] double mean_accuracy() const;
  [[nodiscard]] double std_accuracy() const;
  [[nodiscard]] double mean_seconds() const;
  [[nodiscard]] double total_seconds() const;
};

struct Table1Report {
  std::vector<Table1Cell> cells;

  [[nodiscard]] const Table1Cell& find(int K, double sparsity, Method method) const;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Accuracy and fit time of one method on one generated instance.
struct MethodRun {
  double accuracy = 0.0;
  double seconds = 0.0;
  std::vector<int> labels;
};

[[nodiscard]] MethodRun run_proj_on_truth(const GroundTruth& truth, int K, Normalization normalization,
                                          const KMeansConfig& kmeans);
[[nodiscard]] MethodRun run_lc_on_truth(const GroundTruth& truth, int K, const EmConfig& em);

[[nodiscard]] Table1Report run_table1(const Table1Config& config);

struct ConcentrationConfig {
  std::vector<double> alpha = {0.2, 0.8};
  std::vector<double> q = {0.6, 0.4};
  std::size_t m = 1000;
  std::optional<std::size_t> n;  // default: the largest ell
  std::vector<std::size_t> ells = {10, 50, 250, 1250};
  std::vector<double> epsilons = {0.02, 0.05, 0.1};
  int reps = 30;
  std::uint64_t seed = 0;
  /// Score against the generating alpha_pool instead of the fitted one.
  bool true_pool = false;
};

struct ConcentrationRow {
  std::size_t ell = 0;
  std::vector<double> exceedance;  // mean fraction per epsilon
  double misclassification = 0.0;  // mean over reps; NaN when degenerate
  double proj_accuracy = 0.0;      // k-means pipeline accuracy (direction-aligned), mean over reps
};

struct ConcentrationReport {
  bool degenerate = false;
  CenterSet centers;
  std::optional<SeparationConstants> constants;
  std::vector<double> epsilons;
  std::vector<ConcentrationRow> rows;

  [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] ConcentrationReport run_concentration(const ConcentrationConfig& config);

struct PredictConfig {
  std::vector<Method> methods = {Method::proj, Method::lc};
  std::optional<int> K;
  SegmentConfig segment;
  EmConfig em;
};

struct MethodAccuracy {
  double overall = 0.0;
  std::vector<double> by_segment;  // grouped by the proj segment; NaN for empty segments
};

struct PredictReport {
  double alpha_pool = 0.0;
  int K = 0;
  std::vector<double> alpha_proj;
  std::vector<std::size_t> segment_sizes;  // test customers per proj segment
  std::size_t test_customers = 0;
  std::size_t excluded_customers = 0;  // test customers without training labels
  MethodAccuracy population;
  std::optional<MethodAccuracy> proj;
  std::optional<MethodAccuracy> lc;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Fits on `train`, predicts every test label by thresholding at 0.5 and
/// reports per-customer accuracy averaged over test customers.
[[nodiscard]] PredictReport run_predict(const PreferenceGraph& train, const PreferenceGraph& test,
                                        const PredictConfig& config);

/// Derived seed for a named sub-task.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

}  // namespace mbseg
