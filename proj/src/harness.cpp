#include "mbseg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include <Eigen/SVD>

#include "mbseg/error.hpp"
#include "mbseg/random.hpp"

namespace mbseg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Relabels 1-D segments by score direction, falling back to ascending order
// when the pooled parameter sits at 1/2 and the direction is undefined.
Segmentation align_scalar(const Segmentation& seg, std::optional<double> alpha_pool, std::string& how) {
  if (alpha_pool && std::abs(*alpha_pool - 0.5) > 1e-9) {
    how = *alpha_pool < 0.5 ? "ascending" : "descending";
    return align_labels(seg, AlignMode::by_score, *alpha_pool);
  }
  how = "ascending";
  return align_labels(seg, AlignMode::by_alpha);
}

// Multi-dimensional centers have no natural order; sort by L1 norm.
Segmentation align_by_norm(const Segmentation& seg) {
  const Eigen::VectorXd norms = seg.centers.rowwise().lpNorm<1>();
  std::vector<int> order(static_cast<std::size_t>(seg.K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return norms(a) < norms(b); });
  std::vector<int> relabel(order.size());
  Segmentation out = seg;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    relabel[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos);
    out.centers.row(static_cast<Eigen::Index>(pos)) = seg.centers.row(order[pos]);
  }
  for (auto& l : out.labels) {
    if (l != kExcluded) l = relabel[static_cast<std::size_t>(l)];
  }
  return out;
}

std::vector<int> scatter_labels(const std::vector<int>& labels, const std::vector<Eigen::Index>& rows, std::size_t m) {
  std::vector<int> out(m, kExcluded);
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<std::size_t>(rows[r])] = labels[r];
  return out;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

double per_customer_accuracy(std::span<const Observation> row, bool predict_like) {
  std::size_t hits = 0;
  for (const auto& obs : row) hits += (obs.label == kLike) == predict_like ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(row.size());
}

}  // namespace

std::string to_string(Method method) { return method == Method::proj ? "proj" : "lc"; }

std::vector<Method> parse_methods(const std::string& name) {
  if (name == "proj") return {Method::proj};
  if (name == "lc") return {Method::lc};
  if (name == "both") return {Method::proj, Method::lc};
  throw ValidationError("unknown method '" + name + "' (expected proj|lc|both)");
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  return RandomStream(seed).split(label).split(index).key();
}

double like_fraction(const PreferenceGraph& graph) {
  if (!graph.alphabet().is_binary()) throw ValidationError("like fraction needs binary labels");
  if (graph.edge_count() == 0) throw ValidationError("graph has no observations");
  std::size_t likes = 0;
  for (std::size_t i = 0; i < graph.customers(); ++i) {
    for (const auto& obs : graph.row(i)) likes += obs.label == kLike ? 1 : 0;
  }
  return static_cast<double>(likes) / static_cast<double>(graph.edge_count());
}

SegmentResult run_segment(const PreferenceGraph& graph, const SegmentConfig& config) {
  if (config.K && *config.K < 1) throw ValidationError("K must be >= 1");
  SegmentResult out;
  const auto B = static_cast<Eigen::Index>(graph.categories());

  auto t = Clock::now();
  out.pooled = fit_per_category(graph, config.family);
  if (graph.alphabet().is_binary()) out.alpha_pool = like_fraction(graph);
  out.times.pooled = seconds_since(t);

  t = Clock::now();
  out.scores = pscore_matrix(graph, out.pooled, config.normalization);
  out.times.scores = seconds_since(t);

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < out.scores.rows(); ++i) {
    if (!out.scores.row_empty(i)) rows.push_back(i);
  }
  if (rows.empty()) throw ValidationError("no customer has any observation");

  t = Clock::now();
  Eigen::MatrixXd points;
  if (B == 1 || (out.scores.complete() && config.spectral_components == 0)) {
    out.representation = "scores";
    points = out.scores.values();
  } else if (out.scores.complete()) {
    out.representation = "spectral";
    points = spectral_project(out.scores, config.spectral_components);
  } else {
    out.representation = "factors";
    const int rank = config.rank.value_or(static_cast<int>(std::min<Eigen::Index>(B, config.K.value_or(2))));
    AlsConfig als = config.als;
    als.seed = derive_seed(config.seed, "als");
    out.factors = als_factorize(out.scores, rank, als);
    points = out.factors->reconstruct();
  }
  Eigen::MatrixXd kept(static_cast<Eigen::Index>(rows.size()), points.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) kept.row(static_cast<Eigen::Index>(r)) = points.row(rows[r]);
  out.times.factorize = seconds_since(t);

  t = Clock::now();
  std::vector<double> line(rows.size());
  if (kept.cols() == 1) {
    for (std::size_t r = 0; r < rows.size(); ++r) line[r] = kept(static_cast<Eigen::Index>(r), 0);
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(kept, Eigen::ComputeThinV);
    const Eigen::VectorXd first = kept * svd.matrixV().col(0);
    for (std::size_t r = 0; r < rows.size(); ++r) line[r] = first(static_cast<Eigen::Index>(r));
  }
  int K = 0;
  if (config.K) {
    K = *config.K;
    try {
      out.density = estimate_density(line, config.kde);
    } catch (const NumericalError&) {
    }
  } else {
    out.density = estimate_density(line, config.kde);
    K = static_cast<int>(out.density->peaks.size());
    out.k_estimated = true;
    if (K < 1) throw NumericalError("density estimate has no peaks");
  }
  KMeansConfig km = config.kmeans;
  km.seed = derive_seed(config.seed, "kmeans");
  Segmentation seg = kmeans(kept, K, km);
  if (kept.cols() == 1) {
    seg = align_scalar(seg, out.alpha_pool, out.alignment);
  } else {
    seg = align_by_norm(seg);
    out.alignment = "l1-norm";
  }
  seg.labels = scatter_labels(seg.labels, rows, graph.customers());
  out.segmentation = std::move(seg);
  out.times.cluster = seconds_since(t);
  return out;
}

nlohmann::json SegmentResult::to_json(const PreferenceGraph& graph) const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(segmentation.K), 0);
  std::size_t excluded = 0;
  for (int l : segmentation.labels) {
    if (l == kExcluded) {
      ++excluded;
    } else {
      ++sizes[static_cast<std::size_t>(l)];
    }
  }
  nlohmann::json pooled_json = nlohmann::json::array();
  for (const auto& p : pooled) pooled_json.push_back(p->to_json());
  nlohmann::json doc = {
      {"K", segmentation.K},
      {"k_estimated", k_estimated},
      {"representation", representation},
      {"alignment", alignment},
      {"customers", graph.customers()},
      {"categories", graph.categories()},
      {"excluded_customers", excluded},
      {"segment_sizes", sizes},
      {"centers", matrix_json(segmentation.centers)},
      {"inertia", segmentation.inertia},
      {"kmeans", {{"restart", segmentation.restart}, {"iterations", segmentation.iterations}}},
      {"pooled", pooled_json},
      {"alpha_pool", alpha_pool ? nlohmann::json(*alpha_pool) : nlohmann::json(nullptr)},
      {"timings",
       {{"pooled", times.pooled},
        {"scores", times.scores},
        {"factorize", times.factorize},
        {"cluster", times.cluster},
        {"total", times.total()}}},
  };
  if (factors) {
    doc["factorization"] = {{"rank", factors->rank},
                            {"converged", factors->converged},
                            {"iterations", factors->objective_trace.size()},
                            {"objective", factors->objective_trace.back()}};
  }
  if (density) {
    std::vector<double> peaks;
    for (auto g : density->peaks) peaks.push_back(density->grid[g]);
    doc["density"] = {{"bandwidth", density->bandwidth}, {"peaks", peaks}};
  }
  return doc;
}

void write_assignments_csv(const PreferenceGraph& graph, const std::vector<int>& labels, std::ostream& out) {
  out << "customer,segment\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << graph.customer_id(i) << ',';
    if (labels[i] != kExcluded) out << labels[i];
    out << '\n';
  }
}

MethodRun run_proj_on_truth(const GroundTruth& truth, int K, Normalization normalization,
                            const KMeansConfig& kmeans_config) {
  MethodRun run;
  const auto start = Clock::now();
  const auto pooled = fit_bernoulli(truth.graph);
  const auto scores = pscore(truth.graph, pooled, normalization);
  const auto rows = scores.present_indices();
  const auto values = scores.present_values();
  Segmentation seg = kmeans(values, K, kmeans_config);
  std::string how;
  seg = align_scalar(seg, pooled.alpha_pool(), how);
  std::vector<Eigen::Index> idx(rows.begin(), rows.end());
  run.labels = scatter_labels(seg.labels, idx, truth.graph.customers());
  run.seconds = seconds_since(start);
  run.accuracy = accuracy(run.labels, truth.z);
  return run;
}

MethodRun run_lc_on_truth(const GroundTruth& truth, int K, const EmConfig& em) {
  MethodRun run;
  const auto start = Clock::now();
  const auto model = em_fit(truth.graph, K, em);
  Segmentation seg;
  seg.K = K;
  seg.labels = em_assign(model);
  seg.centers = Eigen::Map<const Eigen::VectorXd>(model.alpha.data(), K);
  run.labels = align_labels(seg, AlignMode::by_alpha).labels;
  run.seconds = seconds_since(start);
  run.accuracy = accuracy(run.labels, truth.z);
  return run;
}

double Table1Cell::mean_accuracy() const { return mean(accuracy); }

double Table1Cell::std_accuracy() const {
  if (accuracy.size() < 2) return 0.0;
  const double mu = mean_accuracy();
  double ss = 0.0;
  for (double a : accuracy) ss += (a - mu) * (a - mu);
  return std::sqrt(ss / static_cast<double>(accuracy.size() - 1));
}

double Table1Cell::mean_seconds() const { return mean(seconds); }

double Table1Cell::total_seconds() const { return std::accumulate(seconds.begin(), seconds.end(), 0.0); }

const Table1Cell& Table1Report::find(int K, double sparsity, Method method) const {
  for (const auto& c : cells) {
    if (c.K == K && std::abs(c.sparsity - sparsity) < 1e-12 && c.method == method) return c;
  }
  throw ValidationError("no table cell for K = " + std::to_string(K) + ", sparsity = " + std::to_string(sparsity));
}

nlohmann::json Table1Report::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : cells) {
    rows.push_back({{"method", to_string(c.method)},
                    {"K", c.K},
                    {"sparsity", c.sparsity},
                    {"accuracy_mean", c.mean_accuracy()},
                    {"accuracy_std", c.std_accuracy()},
                    {"seconds_mean", c.mean_seconds()},
                    {"seeds", c.accuracy.size()},
                    {"accuracy", c.accuracy}});
  }
  return {{"rows", rows}};
}

Table1Report run_table1(const Table1Config& config) {
  if (config.reps < 1) throw ValidationError("reps must be >= 1");
  if (config.methods.empty()) throw ValidationError("at least one method is required");
  Table1Report report;
  const RandomStream root = RandomStream(config.seed).split("table1");
  for (int K : config.Ks) {
    for (std::size_t si = 0; si < config.sparsities.size(); ++si) {
      const double sparsity = config.sparsities[si];
      const RandomStream cell = root.split(static_cast<std::uint64_t>(K)).split(static_cast<std::uint64_t>(si));
      std::vector<Table1Cell> cells;
      for (Method method : config.methods) cells.push_back({K, sparsity, method, {}, {}});
      for (int rep = 0; rep < config.reps; ++rep) {
        const RandomStream inst = cell.split(static_cast<std::uint64_t>(rep));
        const auto q_seed = config.resample_q ? inst.key() : cell.split("q").key();
        SynthSpecInd spec = sample_table1_model(K, sparsity, q_seed);
        spec.seed = inst.split("data").key();
        const auto truth = gen_lc_ind(spec);
        for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
          MethodRun run;
          if (config.methods[mi] == Method::proj) {
            KMeansConfig km = config.kmeans;
            km.seed = inst.split("proj").key();
            run = run_proj_on_truth(truth, K, config.normalization, km);
          } else {
            EmConfig em = config.em;
            em.seed = inst.split("lc").key();
            run = run_lc_on_truth(truth, K, em);
          }
          cells[mi].accuracy.push_back(run.accuracy);
          cells[mi].seconds.push_back(run.seconds);
        }
      }
      report.cells.insert(report.cells.end(), cells.begin(), cells.end());
    }
  }
  return report;
}

ConcentrationReport run_concentration(const ConcentrationConfig& config) {
  if (config.ells.empty()) throw ValidationError("at least one ell is required");
  if (config.reps < 1) throw ValidationError("reps must be >= 1");
  ConcentrationReport report;
  report.centers = centers(config.alpha, config.q);
  report.epsilons = config.epsilons;
  try {
    report.constants = separation_constants(report.centers);
  } catch (const ValidationError&) {
  }
  report.degenerate = !report.constants.has_value();
  const std::size_t n = config.n.value_or(*std::max_element(config.ells.begin(), config.ells.end()));
  const int K = report.centers.K();
  const RandomStream root = RandomStream(config.seed).split("concentration");

  for (std::size_t e = 0; e < config.ells.size(); ++e) {
    ConcentrationRow row;
    row.ell = config.ells[e];
    row.exceedance.assign(config.epsilons.size(), 0.0);
    std::vector<double> miss;
    std::vector<double> acc;
    for (int rep = 0; rep < config.reps; ++rep) {
      const RandomStream inst = root.split(static_cast<std::uint64_t>(e)).split(static_cast<std::uint64_t>(rep));
      SynthSpecInd spec;
      spec.m = config.m;
      spec.n = n;
      spec.q = config.q;
      spec.alpha = config.alpha;
      spec.ell = config.ells[e];
      spec.seed = inst.split("data").key();
      const auto truth = gen_lc_ind_regular(spec);
      const BernoulliPooled pooled =
          config.true_pool ? BernoulliPooled(report.centers.alpha_pool(0)) : fit_bernoulli(truth.graph);
      const auto scores = pscore_entropy(truth.graph, pooled);
      for (std::size_t k = 0; k < config.epsilons.size(); ++k) {
        std::size_t over = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
          const double h = report.centers.H(truth.z[i], 0);
          over += std::abs(scores.values[i] - h) / h > config.epsilons[k] ? 1 : 0;
        }
        row.exceedance[k] += static_cast<double>(over) / static_cast<double>(scores.size());
      }
      ClassifyOptions opts;
      opts.allow_degenerate = true;
      miss.push_back(misclassification(nn_classify_scalar(scores, report.centers, opts), truth.z));
      KMeansConfig km;
      km.seed = inst.split("proj").key();
      acc.push_back(run_proj_on_truth(truth, K, Normalization::entropy, km).accuracy);
    }
    for (auto& v : row.exceedance) v /= config.reps;
    row.misclassification = mean(miss);
    row.proj_accuracy = mean(acc);
    report.rows.push_back(std::move(row));
  }
  return report;
}

nlohmann::json ConcentrationReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"ell", r.ell},
                         {"exceedance", r.exceedance},
                         {"misclassification", r.misclassification},
                         {"proj_accuracy", r.proj_accuracy}});
  }
  nlohmann::json doc = {{"degenerate", degenerate},
                        {"alpha_pool", std::vector<double>(centers.alpha_pool.data(),
                                                           centers.alpha_pool.data() + centers.alpha_pool.size())},
                        {"centers", matrix_json(centers.H)},
                        {"epsilons", epsilons},
                        {"rows", rows_json}};
  if (constants) {
    doc["constants"] = {{"lambda", constants->lambda},
                        {"Lambda", constants->Lambda},
                        {"gamma", constants->gamma},
                        {"Gamma", constants->Gamma},
                        {"alpha_min", constants->alpha_min}};
  }
  return doc;
}

PredictReport run_predict(const PreferenceGraph& train, const PreferenceGraph& test, const PredictConfig& config) {
  if (!train.alphabet().is_binary() || !test.alphabet().is_binary()) {
    throw ValidationError("prediction needs binary labels");
  }
  PredictReport report;
  report.alpha_pool = like_fraction(train);

  SegmentConfig seg_config = config.segment;
  if (config.K) seg_config.K = config.K;
  const auto seg = run_segment(train, seg_config);
  report.K = seg.segmentation.K;
  const auto& labels = seg.segmentation.labels;

  std::vector<double> likes(static_cast<std::size_t>(report.K), 0.0);
  std::vector<double> degree(static_cast<std::size_t>(report.K), 0.0);
  for (std::size_t i = 0; i < train.customers(); ++i) {
    if (labels[i] == kExcluded) continue;
    for (const auto& obs : train.row(i)) likes[static_cast<std::size_t>(labels[i])] += obs.label == kLike ? 1.0 : 0.0;
    degree[static_cast<std::size_t>(labels[i])] += static_cast<double>(train.degree(i));
  }
  report.alpha_proj.resize(static_cast<std::size_t>(report.K));
  for (std::size_t k = 0; k < likes.size(); ++k) {
    report.alpha_proj[k] = degree[k] > 0.0 ? likes[k] / degree[k] : std::numeric_limits<double>::quiet_NaN();
  }

  const bool want_proj = std::find(config.methods.begin(), config.methods.end(), Method::proj) != config.methods.end();
  const bool want_lc = std::find(config.methods.begin(), config.methods.end(), Method::lc) != config.methods.end();
  std::optional<LatentClassModel> lc;
  if (want_lc) {
    EmConfig em = config.em;
    em.seed = derive_seed(config.segment.seed, "lc");
    lc = em_fit(train, report.K, em);
  }

  std::unordered_map<std::string, std::size_t> train_index;
  for (std::size_t i = 0; i < train.customers(); ++i) train_index.emplace(train.customer_id(i), i);

  struct Sums {
    double total = 0.0;
    std::vector<double> by_segment;
  };
  const auto K = static_cast<std::size_t>(report.K);
  Sums pop{0.0, std::vector<double>(K, 0.0)};
  Sums proj{0.0, std::vector<double>(K, 0.0)};
  Sums lcs{0.0, std::vector<double>(K, 0.0)};
  report.segment_sizes.assign(K, 0);
  std::size_t counted = 0;
  for (std::size_t t = 0; t < test.customers(); ++t) {
    const auto row = test.row(t);
    if (row.empty()) continue;
    ++report.test_customers;
    const auto it = train_index.find(test.customer_id(t));
    if (it == train_index.end() || labels[it->second] == kExcluded) {
      ++report.excluded_customers;
      continue;
    }
    const std::size_t i = it->second;
    const auto k = static_cast<std::size_t>(labels[i]);
    ++counted;
    ++report.segment_sizes[k];
    const double a_pop = per_customer_accuracy(row, report.alpha_pool >= 0.5);
    pop.total += a_pop;
    pop.by_segment[k] += a_pop;
    const double a_proj = per_customer_accuracy(row, report.alpha_proj[k] >= 0.5);
    proj.total += a_proj;
    proj.by_segment[k] += a_proj;
    if (lc) {
      const double a_lc = per_customer_accuracy(row, mixture_prediction(*lc, i) >= 0.5);
      lcs.total += a_lc;
      lcs.by_segment[k] += a_lc;
    }
  }
  if (counted == 0) throw ValidationError("no test customer has training observations");

  auto finish = [&](const Sums& s) {
    MethodAccuracy out;
    out.overall = 100.0 * s.total / static_cast<double>(counted);
    for (std::size_t k = 0; k < K; ++k) {
      out.by_segment.push_back(report.segment_sizes[k] > 0
                                   ? 100.0 * s.by_segment[k] / static_cast<double>(report.segment_sizes[k])
                                   : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
  };
  report.population = finish(pop);
  if (want_proj) report.proj = finish(proj);
  if (lc) report.lc = finish(lcs);
  return report;
}

nlohmann::json PredictReport::to_json() const {
  auto method_json = [](const MethodAccuracy& a) {
    return nlohmann::json{{"accuracy", a.overall}, {"by_segment", a.by_segment}};
  };
  nlohmann::json methods = {{"population", method_json(population)}};
  if (proj) methods["proj"] = method_json(*proj);
  if (lc) methods["lc"] = method_json(*lc);
  return {{"alpha_pool", alpha_pool},
          {"K", K},
          {"alpha_proj", alpha_proj},
          {"segment_sizes", segment_sizes},
          {"test_customers", test_customers},
          {"excluded_customers", excluded_customers},
          {"methods", methods}};
}

}  // namespace mbseg
