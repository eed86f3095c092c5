#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mbseg/error.hpp"
#include "mbseg/harness.hpp"

using nlohmann::json;
using namespace mbseg;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string input;
  std::string output;
  std::string config;
  std::uint64_t seed = 0;
  std::string k = "auto";
  std::string method = "both";
  std::string normalization = "entropy";
  std::string family = "bernoulli";
  std::optional<int> rank;
  int reps = 30;
  bool categorical = false;
};

template <typename T>
void take(const json& doc, const char* key, T& dst) {
  if (doc.contains(key)) dst = doc.at(key).get<T>();
}

template <typename T>
void take(const json& doc, const char* key, std::optional<T>& dst) {
  if (doc.contains(key)) dst = doc.at(key).is_null() ? std::nullopt : std::optional<T>(doc.at(key).get<T>());
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// Keys in the --config file override the matching flags.
json apply_config(Common& c) {
  if (c.config.empty()) return json::object();
  json doc = load_json(c.config);
  if (!doc.is_object()) throw ValidationError("--config must hold a JSON object");
  take(doc, "input", c.input);
  take(doc, "output", c.output);
  take(doc, "seed", c.seed);
  if (doc.contains("k")) c.k = doc["k"].is_string() ? doc["k"].get<std::string>() : std::to_string(doc["k"].get<int>());
  take(doc, "method", c.method);
  take(doc, "normalization", c.normalization);
  take(doc, "family", c.family);
  take(doc, "rank", c.rank);
  take(doc, "reps", c.reps);
  take(doc, "categorical", c.categorical);
  return doc;
}

std::optional<int> parse_k(const std::string& k) {
  if (k == "auto") return std::nullopt;
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(k, &used);
  } catch (const std::exception&) {
    throw ValidationError("--k must be a positive integer or 'auto', got '" + k + "'");
  }
  if (used != k.size() || value < 1) throw ValidationError("--k must be a positive integer or 'auto', got '" + k + "'");
  return value;
}

int require_k(const std::string& k) {
  auto v = parse_k(k);
  if (!v) throw ValidationError("this command needs an explicit --k");
  return *v;
}

PreferenceGraph load_graph(const Common& c, const std::string& path) {
  if (path.empty()) throw ValidationError("--input is required");
  ParseOptions opts;
  opts.mode = c.categorical ? LabelMode::categorical : LabelMode::binary;
  return load_csv(path, opts);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

void emit(const Common& c, const std::string& command, const json& result) {
  const json report = {{"command", command}, {"seed", c.seed}, {"result", result}};
  if (c.output.empty() || c.output == "-") {
    std::cout << report.dump(2) << '\n';
  } else {
    auto out = open_out(c.output);
    out << report.dump(2) << '\n';
  }
}

SegmentConfig segment_config(const Common& c, const json& doc) {
  SegmentConfig s;
  s.K = parse_k(c.k);
  s.family = parse_pooled_family(c.family);
  s.normalization = parse_normalization(c.normalization);
  s.rank = c.rank;
  s.seed = c.seed;
  take(doc, "spectral_components", s.spectral_components);
  take(doc, "restarts", s.kmeans.restarts);
  take(doc, "grid_size", s.kde.grid_size);
  take(doc, "peak_threshold", s.kde.peak_threshold);
  take(doc, "ridge", s.als.ridge);
  return s;
}

EmConfig em_config(const Common& c, const json& doc) {
  EmConfig em;
  em.seed = c.seed;
  take(doc, "em_restarts", em.restarts);
  take(doc, "max_iters", em.max_iters);
  take(doc, "tol", em.tol);
  take(doc, "prior_a", em.prior_a);
  take(doc, "prior_b", em.prior_b);
  take(doc, "prior_dirichlet", em.prior_dirichlet);
  return em;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--input", c.input, "Input CSV (customer,item,label[,category])");
  cmd->add_option("--output", c.output, "Output JSON report (default: stdout)");
  cmd->add_option("--config", c.config, "JSON file whose keys override flags");
  cmd->add_option("--seed", c.seed, "Random seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based projection segmentation of customer preference data"};
  app.require_subcommand(1);
  Common c;

  // segment
  std::string assignments;
  std::string density_csv;
  std::string scores_csv;
  auto* seg = app.add_subcommand("segment", "Segment customers with the projection pipeline");
  add_common(seg, c);
  seg->add_option("--k", c.k, "Number of segments or 'auto'");
  seg->add_option("--normalization", c.normalization, "degree|entropy");
  seg->add_option("--family", c.family, "Pooled family: bernoulli|per_item_binary|per_item_categorical");
  seg->add_option("--rank", c.rank, "Factorization rank for incomplete multi-category scores");
  seg->add_flag("--categorical", c.categorical, "Read labels as categorical symbols");
  seg->add_option("--assignments", assignments, "Write customer,segment CSV");
  seg->add_option("--density", density_csv, "Write score,density CSV");
  seg->add_option("--scores", scores_csv, "Write customer,category,score CSV");

  // estimate-k
  auto* est = app.add_subcommand("estimate-k", "Estimate the number of segments from the score density");
  add_common(est, c);
  est->add_option("--normalization", c.normalization, "degree|entropy");
  est->add_option("--family", c.family, "Pooled family");
  est->add_flag("--categorical", c.categorical, "Read labels as categorical symbols");
  est->add_option("--density", density_csv, "Write score,density CSV");

  // em
  auto* em = app.add_subcommand("em", "Fit the latent-class EM benchmark");
  add_common(em, c);
  em->add_option("--k", c.k, "Number of segments")->required();
  em->add_option("--assignments", assignments, "Write customer,segment CSV");

  // synth
  std::string truth_csv;
  std::string synth_report;
  std::string model = "lc-ind";
  std::size_t m = 2000;
  std::size_t n = 100;
  std::vector<double> alpha;
  std::vector<double> q;
  double p = 1.0;
  std::optional<std::size_t> ell;
  std::optional<int> table1_k;
  double sparsity = 0.0;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic population and preference graph");
  syn->add_option("--output", c.output, "Output graph CSV")->required();
  syn->add_option("--config", c.config, "JSON generator spec (lc-ind or lc-ind-cat)");
  syn->add_option("--seed", c.seed, "Random seed");
  syn->add_option("--truth", truth_csv, "Write customer,true_segment CSV");
  syn->add_option("--report", synth_report, "Output JSON report (default: stdout)");
  syn->add_option("--m", m, "Customers");
  syn->add_option("--n", n, "Items");
  syn->add_option("--alpha", alpha, "Per-segment like-probabilities")->delimiter(',');
  syn->add_option("--q", q, "Segment proportions")->delimiter(',');
  syn->add_option("--p", p, "Edge probability");
  syn->add_option("--ell", ell, "Items rated per customer (regular design)");
  syn->add_option("--table1-k", table1_k, "Sample a benchmark model (table1 protocol) with this K");
  syn->add_option("--sparsity", sparsity, "Sparsity 1 - p for --table1-k");

  // table1
  std::vector<int> ks = {5, 7, 9};
  std::vector<double> sparsities = {0.0, 0.2, 0.4, 0.6, 0.8};
  auto* t1 = app.add_subcommand("table1", "Recovery accuracy of LC and proj over (K, sparsity)");
  t1->add_option("--output", c.output, "Output JSON report (default: stdout)");
  t1->add_option("--config", c.config, "JSON file whose keys override flags");
  t1->add_option("--seed", c.seed, "Random seed");
  t1->add_option("--reps", c.reps, "Instances per cell");
  t1->add_option("--method", c.method, "proj|lc|both");
  t1->add_option("--normalization", c.normalization, "degree|entropy");
  t1->add_option("--ks", ks, "Segment counts")->delimiter(',');
  t1->add_option("--sparsities", sparsities, "Sparsity levels 1 - p")->delimiter(',');

  // concentration
  ConcentrationConfig conc;
  auto* con = app.add_subcommand("concentration", "Score concentration and classifier error versus ell");
  con->add_option("--output", c.output, "Output JSON report (default: stdout)");
  con->add_option("--config", c.config, "JSON file whose keys override flags");
  con->add_option("--seed", c.seed, "Random seed");
  con->add_option("--reps", c.reps, "Replications per ell");
  con->add_option("--alpha", conc.alpha, "Per-segment like-probabilities")->delimiter(',');
  con->add_option("--q", conc.q, "Segment proportions")->delimiter(',');
  con->add_option("--m", conc.m, "Customers");
  con->add_option("--n", conc.n, "Items (default: largest ell)");
  con->add_option("--ells", conc.ells, "Labels per customer")->delimiter(',');
  con->add_option("--epsilons", conc.epsilons, "Relative deviation thresholds")->delimiter(',');
  con->add_flag("--true-pool", conc.true_pool, "Score with the generating alpha_pool");

  // predict
  std::string test_path;
  double test_fraction = 0.2;
  auto* pre = app.add_subcommand("predict", "Holdout label prediction from segments");
  add_common(pre, c);
  pre->add_option("--test", test_path, "Test CSV sharing customer ids with --input");
  pre->add_option("--test-fraction", test_fraction, "Holdout fraction when --test is not given");
  pre->add_option("--k", c.k, "Number of segments or 'auto'");
  pre->add_option("--method", c.method, "proj|lc|both");
  pre->add_option("--normalization", c.normalization, "degree|entropy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    const json doc = apply_config(c);
    if (seg->parsed()) {
      const auto graph = load_graph(c, c.input);
      const auto result = run_segment(graph, segment_config(c, doc));
      emit(c, "segment", result.to_json(graph));
      if (!assignments.empty()) {
        auto out = open_out(assignments);
        write_assignments_csv(graph, result.segmentation.labels, out);
      }
      if (!density_csv.empty() && result.density) {
        auto out = open_out(density_csv);
        write_density_csv(*result.density, out);
      }
      if (!scores_csv.empty()) {
        auto out = open_out(scores_csv);
        write_scores_csv(graph, result.scores, out);
      }
    } else if (est->parsed()) {
      const auto graph = load_graph(c, c.input);
      auto cfg = segment_config(c, doc);
      cfg.K.reset();
      const auto result = run_segment(graph, cfg);
      std::vector<double> peaks;
      for (auto g : result.density->peaks) peaks.push_back(result.density->grid[g]);
      emit(c, "estimate-k",
           {{"K", result.segmentation.K}, {"bandwidth", result.density->bandwidth}, {"peaks", peaks}});
      if (!density_csv.empty()) {
        auto out = open_out(density_csv);
        write_density_csv(*result.density, out);
      }
    } else if (em->parsed()) {
      const auto graph = load_graph(c, c.input);
      const auto model = em_fit(graph, require_k(c.k), em_config(c, doc));
      Segmentation s;
      s.K = model.K;
      s.labels = em_assign(model);
      s.centers = Eigen::Map<const Eigen::VectorXd>(model.alpha.data(), model.K);
      s = align_labels(s, AlignMode::by_alpha);
      json result = model.to_json();
      std::vector<double> sorted_alpha(s.centers.data(), s.centers.data() + s.K);
      result["alpha_sorted"] = sorted_alpha;
      emit(c, "em", result);
      if (!assignments.empty()) {
        auto out = open_out(assignments);
        write_assignments_csv(graph, s.labels, out);
      }
    } else if (syn->parsed()) {
      json spec;
      if (!doc.empty()) {
        spec = doc;
        spec.erase("output");
        if (!spec.contains("seed")) spec["seed"] = c.seed;
      } else if (table1_k) {
        spec = sample_table1_model(*table1_k, sparsity, c.seed).to_json();
      } else {
        SynthSpecInd s;
        s.m = m;
        s.n = n;
        s.alpha = alpha;
        s.q = q;
        s.p = p;
        s.ell = ell;
        s.seed = c.seed;
        spec = s.to_json();
      }
      const auto truth = generate(spec);
      save_csv(truth.graph, c.output);
      if (!truth_csv.empty()) {
        auto out = open_out(truth_csv);
        write_truth_csv(truth, out);
      }
      Common r = c;
      r.output = synth_report;
      emit(r, "synth",
           {{"spec", truth.spec},
            {"customers", truth.graph.customers()},
            {"items", truth.graph.items()},
            {"edges", truth.graph.edge_count()}});
    } else if (t1->parsed()) {
      Table1Config cfg;
      take(doc, "ks", ks);
      take(doc, "sparsities", sparsities);
      cfg.Ks = ks;
      cfg.sparsities = sparsities;
      cfg.reps = c.reps;
      cfg.seed = c.seed;
      cfg.methods = parse_methods(c.method);
      cfg.normalization = parse_normalization(c.normalization);
      take(doc, "resample_q", cfg.resample_q);
      cfg.em = em_config(c, doc);
      emit(c, "table1", run_table1(cfg).to_json());
    } else if (con->parsed()) {
      take(doc, "alpha", conc.alpha);
      take(doc, "q", conc.q);
      take(doc, "m", conc.m);
      take(doc, "n", conc.n);
      take(doc, "ells", conc.ells);
      take(doc, "epsilons", conc.epsilons);
      take(doc, "true_pool", conc.true_pool);
      conc.reps = c.reps;
      conc.seed = c.seed;
      emit(c, "concentration", run_concentration(conc).to_json());
    } else if (pre->parsed()) {
      take(doc, "test", test_path);
      take(doc, "test_fraction", test_fraction);
      const auto graph = load_graph(c, c.input);
      PredictConfig cfg;
      cfg.methods = parse_methods(c.method);
      cfg.K = parse_k(c.k);
      cfg.segment = segment_config(c, doc);
      cfg.em = em_config(c, doc);
      PredictReport report;
      if (test_path.empty()) {
        if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("--test-fraction must lie in (0, 1)");
        const auto split = split_holdout(graph, test_fraction, derive_seed(c.seed, "holdout"));
        report = run_predict(split.train, split.test, cfg);
      } else {
        report = run_predict(graph, load_graph(c, test_path), cfg);
      }
      emit(c, "predict", report.to_json());
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const json::exception& e) {
    std::cerr << "error: bad configuration: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
