// Acceptance run: one PASS/FAIL line per criterion, details indented below it.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "mbseg/classify.hpp"
#include "mbseg/cluster.hpp"
#include "mbseg/factorize.hpp"
#include "mbseg/harness.hpp"
#include "mbseg/lcem.hpp"
#include "mbseg/random.hpp"
#include "mbseg/synthgen.hpp"

using namespace mbseg;

namespace {

int failures = 0;

void verdict(const std::string& id, bool ok, const std::string& what) {
  std::printf("%s %s %s\n", ok ? "PASS" : "FAIL", id.c_str(), what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void detail(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

Table1Report table_cells(int K, std::vector<double> sparsities) {
  Table1Config cfg;
  cfg.Ks = {K};
  cfg.sparsities = std::move(sparsities);
  cfg.reps = 30;
  cfg.seed = 0;
  return run_table1(cfg);
}

void print_cell(const Table1Report& r, int K, double s) {
  const auto& lc = r.find(K, s, Method::lc);
  const auto& proj = r.find(K, s, Method::proj);
  detail("K=%d sparsity=%.1f  LC %.1f (sd %.1f, %.3fs total)  proj %.1f (sd %.1f, %.3fs total)", K, s,
         lc.mean_accuracy(), lc.std_accuracy(), lc.total_seconds(), proj.mean_accuracy(), proj.std_accuracy(),
         proj.total_seconds());
}

void criterion_table1() {
  const auto k5 = table_cells(5, {0.0});
  const auto k9 = table_cells(9, {0.6});
  const auto k7 = table_cells(7, {0.8});
  print_cell(k5, 5, 0.0);
  print_cell(k9, 9, 0.6);
  print_cell(k7, 7, 0.8);
  const double p5 = k5.find(5, 0.0, Method::proj).mean_accuracy();
  const double l5 = k5.find(5, 0.0, Method::lc).mean_accuracy();
  const double p9 = k9.find(9, 0.6, Method::proj).mean_accuracy();
  const double l9 = k9.find(9, 0.6, Method::lc).mean_accuracy();
  const double p7 = k7.find(7, 0.8, Method::proj).mean_accuracy();
  const double l7 = k7.find(7, 0.8, Method::lc).mean_accuracy();
  struct Check {
    const char* name;
    bool ok;
  };
  const Check checks[] = {
      {"K5 proj 98.7+-2", within(p5, 98.7, 2.0)}, {"K5 LC 99.0+-2", within(l5, 99.0, 2.0)},
      {"K9 proj 61.5+-5", within(p9, 61.5, 5.0)}, {"K9 LC 47.9+-6", within(l9, 47.9, 6.0)},
      {"K9 proj>LC", p9 > l9},                    {"K7 proj>LC", p7 > l7},
      {"K7 proj 61.4+-5", within(p7, 61.4, 5.0)},
  };
  bool all = true;
  std::string failed;
  for (const auto& c : checks) {
    all = all && c.ok;
    if (!c.ok) failed += std::string(failed.empty() ? "" : ", ") + c.name;
  }
  verdict("C1", all, "table spot reproduction" + (failed.empty() ? std::string() : " (failed: " + failed + ")"));
}

void criterion_speed() {
  const auto r = table_cells(9, {0.4});
  print_cell(r, 9, 0.4);
  const double lc = r.find(9, 0.4, Method::lc).total_seconds();
  const double proj = r.find(9, 0.4, Method::proj).total_seconds();
  detail("LC / proj wall-clock ratio %.1f", lc / proj);
  verdict("C2", proj <= lc / 3.0, "proj wall-clock <= 1/3 of LC on K=9 sparsity 0.4");
}

void criterion_concentration() {
  ConcentrationConfig cfg;
  cfg.m = 1000;
  cfg.ells = {50, 500, 5000};
  cfg.epsilons = {0.05};
  cfg.reps = 10;
  const auto r = run_concentration(cfg);
  bool monotone = true;
  for (std::size_t e = 0; e < r.rows.size(); ++e) {
    detail("ell=%zu  fraction beyond 0.05 = %.4f", r.rows[e].ell, r.rows[e].exceedance[0]);
    if (e > 0 && r.rows[e].exceedance[0] > r.rows[e - 1].exceedance[0]) monotone = false;
  }
  verdict("C3", r.rows.back().exceedance[0] < 0.01 && monotone,
          "score concentration: < 1% beyond 0.05 at ell=5000, non-increasing in ell");
}

void criterion_negative_controls() {
  ConcentrationConfig a;
  a.alpha = {0.1, 0.9};
  a.q = {0.5, 0.5};
  a.m = 1000;
  a.ells = {1000};
  a.reps = 30;
  const auto ra = run_concentration(a);
  ConcentrationConfig b = a;
  b.alpha = {0.3, 0.3};
  const auto rb = run_concentration(b);
  const double acc_a = ra.rows[0].proj_accuracy;
  const double acc_b = rb.rows[0].proj_accuracy;
  detail("(a) alpha=(0.1,0.9): proj accuracy %.1f, true-center classifier misclassification %.3f", acc_a,
         ra.rows[0].misclassification);
  detail("(b) alpha=(0.3,0.3): proj accuracy %.1f", acc_b);
  verdict("C4a", acc_a >= 45.0 && acc_a <= 55.0, "alpha_pool = 1/2 gives chance accuracy");
  verdict("C4b", acc_b >= 45.0 && acc_b <= 55.0, "equal segment parameters give chance accuracy");
}

void criterion_sufficiency() {
  ConcentrationConfig cfg;
  cfg.m = 1000;
  cfg.ells = {10, 50, 250, 1250};
  cfg.reps = 30;
  const auto r = run_concentration(cfg);
  bool monotone = true;
  for (std::size_t e = 0; e < r.rows.size(); ++e) {
    detail("ell=%zu  misclassification %.4f", r.rows[e].ell, r.rows[e].misclassification);
    if (e > 0 && r.rows[e].misclassification > r.rows[e - 1].misclassification) monotone = false;
  }
  verdict("C5", r.rows.back().misclassification < 0.01 && monotone,
          "nearest-center misclassification < 1% at ell=1250, non-increasing in ell");
}

void criterion_categories() {
  Eigen::MatrixXd alpha(2, 2);
  alpha << 0.2, 0.5, 0.7, 0.5;
  const std::vector<double> q = {0.5, 0.5};
  const auto truth_centers = centers(alpha, q);
  std::vector<double> dropped_acc;
  std::vector<double> full_miss;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SynthSpecCat s;
    s.m = 1000;
    s.n_b = {1000, 1000};
    s.ell_b = {1000, 1000};
    s.q = q;
    s.alpha = alpha;
    s.seed = seed;
    const auto truth = gen_lc_ind_cat(s);
    const auto models = fit_per_category(truth.graph, PooledFamily::bernoulli);
    const auto scores = pscore_matrix(truth.graph, models, Normalization::entropy);

    const auto second = scores.column(1);
    KMeansConfig km;
    km.seed = derive_seed(seed, "kmeans");
    const auto seg = kmeans(second.present_values(), 2, km);
    const double pool2 = dynamic_cast<const BernoulliPooled&>(*models[1]).alpha_pool();
    const auto aligned = align_labels(seg, AlignMode::by_score, pool2);
    dropped_acc.push_back(accuracy(aligned.labels, truth.z));

    full_miss.push_back(misclassification(nn_classify_vector(scores, truth_centers), truth.z));
  }
  detail("category 1 dropped: mean accuracy %.1f", mean(dropped_acc));
  detail("both categories, true centers: mean misclassification %.4f", mean(full_miss));
  const double acc = mean(dropped_acc);
  verdict("C6", acc >= 45.0 && acc <= 55.0 && mean(full_miss) < 0.01,
          "per-category scores: chance without category 1, < 1% error with both");
}

void criterion_em_monotone() {
  int violations = 0;
  std::size_t steps = 0;
  const int Ks[] = {5, 7, 9};
  const double sparsities[] = {0.0, 0.2, 0.4, 0.6, 0.8};
  for (int run = 0; run < 30; ++run) {
    const int K = Ks[run % 3];
    const double s = sparsities[run % 5];
    const auto truth = gen_lc_ind(sample_table1_model(K, s, 1000 + static_cast<std::uint64_t>(run)));
    EmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(run);
    const auto model = em_fit(truth.graph, K, cfg);
    const auto& t = model.log_posterior_trace;
    for (std::size_t k = 1; k < t.size(); ++k) {
      ++steps;
      if (t[k] < t[k - 1] - 1e-10 * std::abs(t[k - 1])) ++violations;
    }
  }
  detail("%zu EM iterations checked, %d decreases", steps, violations);
  verdict("C7", violations == 0, "EM log posterior non-decreasing on 30 runs");
}

void criterion_factorization() {
  RandomStream rng(8080);
  double worst = 0.0;
  int non_monotone = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = static_cast<Eigen::Index>(20 + rng.below(181));
    const auto B = static_cast<Eigen::Index>(6 + rng.below(15));
    const int r = 1 + static_cast<int>(rng.below(5));
    Eigen::MatrixXd U(m, r);
    Eigen::MatrixXd V(B, r);
    for (Eigen::Index i = 0; i < U.size(); ++i) U.data()[i] = 2.0 * rng.uniform() - 1.0;
    for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = 2.0 * rng.uniform() - 1.0;
    Eigen::MatrixXd X = U * V.transpose();
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] += 0.1 * (2.0 * rng.uniform() - 1.0);
    const ScoreMatrix scores(X, Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m, B, true));
    AlsConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto f = als_factorize(scores, r, cfg);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const double optimum = svd.singularValues().tail(B - r).squaredNorm();
    worst = std::max(worst, std::abs(observed_squared_error(scores, f.reconstruct()) - optimum) / optimum);
    for (std::size_t t = 1; t < f.objective_trace.size(); ++t) {
      if (f.objective_trace[t] > f.objective_trace[t - 1] * (1.0 + 1e-12)) {
        ++non_monotone;
        break;
      }
    }
  }
  detail("worst relative gap to the truncated SVD %.2e; %d non-monotone traces", worst, non_monotone);
  verdict("C8", worst <= 1e-6 && non_monotone == 0, "ALS matches truncated SVD on 50 complete matrices");
}

void criterion_identity() {
  RandomStream rng(99);
  std::vector<std::vector<Observation>> rows(1000);
  const std::uint32_t n = 200;
  for (auto& row : rows) {
    const auto d = 1 + rng.below(n);
    const double a = 0.05 + 0.9 * rng.uniform();
    for (std::uint32_t j = 0; j < d; ++j) row.push_back({j, rng.uniform() < a ? kLike : kDislike});
  }
  const PreferenceGraph g(LabelAlphabet::binary(), n, std::vector<std::uint32_t>(n, 0), 1, std::move(rows));
  const auto pooled = fit_bernoulli(g);
  const double a = pooled.alpha_pool();
  const double h = -a * std::log(a) - (1 - a) * std::log(1 - a);
  const auto deg = pscore_degree(g, pooled);
  const auto ent = pscore_entropy(g, pooled);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.customers(); ++i) worst = std::max(worst, std::abs(ent.values[i] - deg.values[i] / h));
  detail("max |entropy - degree / H| = %.2e", worst);
  verdict("C9", worst <= 1e-12, "entropy normalization = degree normalization / H(alpha_pool)");
}

void criterion_estimate_k() {
  int hits = 0;
  std::vector<int> found;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SynthSpecInd s;
    s.m = 2000;
    s.n = 500;
    s.ell = 500;
    s.q = {0.5, 0.3, 0.2};
    s.alpha = {0.1, 0.5, 0.9};
    s.seed = seed;
    const auto truth = gen_lc_ind(s);
    const auto scores = pscore_entropy(truth.graph, fit_bernoulli(truth.graph));
    const int k = estimate_k(scores.present_values());
    found.push_back(k);
    hits += k == 3 ? 1 : 0;
  }
  std::string list;
  for (int k : found) list += std::to_string(k);
  detail("estimated K per seed: %s", list.c_str());
  verdict("C10", hits >= 27, "density peaks give K=3 in " + std::to_string(hits) + "/30 seeds");
}

void criterion_predict() {
  std::vector<double> pop;
  std::vector<double> proj;
  std::vector<double> lc;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SynthSpecInd s;
    s.m = 500;
    s.n = 100;
    s.q = {0.6, 0.4};
    s.alpha = {0.2, 0.8};
    s.p = 0.5;
    s.seed = seed;
    const auto truth = gen_lc_ind(s);
    const auto split = split_holdout(truth.graph, 0.3, derive_seed(seed, "holdout"));
    PredictConfig cfg;
    cfg.K = 2;
    cfg.segment.seed = seed;
    const auto r = run_predict(split.train, split.test, cfg);
    pop.push_back(r.population.overall);
    proj.push_back(r.proj->overall);
    lc.push_back(r.lc->overall);
  }
  detail("population %.1f  proj %.1f  LC %.1f", mean(pop), mean(proj), mean(lc));
  verdict("PREDICT", mean(proj) >= mean(pop) + 10.0 && mean(lc) >= mean(pop) + 10.0,
          "segment-based prediction beats the population model by >= 10 points");
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {
      criterion_table1,     criterion_speed,       criterion_concentration, criterion_negative_controls,
      criterion_sufficiency, criterion_categories, criterion_em_monotone,   criterion_factorization,
      criterion_identity,   criterion_estimate_k,  criterion_predict,
  };
  for (const auto& run : criteria) run();
  std::printf("%d failing criteria\n", failures);
  return failures == 0 ? 0 : 1;
}
