#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "mbseg/cluster.hpp"
#include "mbseg/error.hpp"
#include "mbseg/lcem.hpp"
#include "mbseg/synthgen.hpp"

using namespace mbseg;
using doctest::Approx;

namespace {

SynthSpecInd two_segment(std::uint64_t seed, double p = 1.0) {
  SynthSpecInd s;
  s.m = 400;
  s.n = 60;
  s.q = {0.6, 0.4};
  s.alpha = {0.2, 0.8};
  s.p = p;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("EM with one class is the smoothed like-fraction") {
  const auto g = testing::counts_graph({{3, 1}, {2, 4}, {0, 2}});
  const auto model = em_fit(g, 1);
  CHECK(model.q[0] == Approx(1.0));
  CHECK(model.alpha[0] == Approx((5.0 + 1.0) / (12.0 + 2.0)));

  EmConfig flat;
  flat.prior_a = flat.prior_b = flat.prior_dirichlet = 1.0;
  CHECK(em_fit(g, 1, flat).alpha[0] == Approx(5.0 / 12.0));
}

TEST_CASE("EM steps") {
  CustomerCounts counts{{8, 1, 9, 0}, {10, 10, 10, 10}};
  Eigen::MatrixXd resp(4, 2);
  resp << 1, 0, 0, 1, 1, 0, 0, 1;
  EmConfig cfg;
  std::vector<double> q;
  std::vector<double> alpha;
  m_step(counts, resp, cfg, q, alpha);
  // Responsibilities concentrated on one class reproduce that class's counts (plus prior pseudo-counts).
  CHECK(alpha[0] == Approx((17.0 + 1.0) / (20.0 + 2.0)));
  CHECK(alpha[1] == Approx((1.0 + 1.0) / (20.0 + 2.0)));
  CHECK(q[0] == Approx((2.0 + 0.5) / (4.0 + 1.0)));

  Eigen::MatrixXd r;
  const double ll = e_step(counts, {0.5, 0.5}, {0.8, 0.2}, r);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(r.row(i).sum() == Approx(1.0));
  // Independent likelihood for customer 0.
  const double l0 = std::log(0.5 * std::pow(0.8, 8) * std::pow(0.2, 2) + 0.5 * std::pow(0.2, 8) * std::pow(0.8, 2));
  double expected = l0;
  expected += std::log(0.5 * std::pow(0.8, 1) * std::pow(0.2, 9) + 0.5 * std::pow(0.2, 1) * std::pow(0.8, 9));
  expected += std::log(0.5 * std::pow(0.8, 9) * std::pow(0.2, 1) + 0.5 * std::pow(0.2, 9) * std::pow(0.8, 1));
  expected += std::log(0.5 * std::pow(0.2, 10) + 0.5 * std::pow(0.8, 10));
  CHECK(ll == Approx(expected));
  CHECK(r(0, 0) == Approx(0.5 * std::pow(0.8, 8) * std::pow(0.2, 2) / std::exp(l0)));
}

TEST_CASE("EM log posterior never decreases") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto truth = gen_lc_ind(sample_table1_model(5, 0.4, seed));
    EmConfig cfg;
    cfg.seed = seed;
    cfg.restarts = 2;
    const auto model = em_fit(truth.graph, 5, cfg);
    const auto& t = model.log_posterior_trace;
    for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k] >= t[k - 1] - 1e-10 * std::abs(t[k - 1]));
    double qsum = 0.0;
    for (double v : model.q) qsum += v;
    CHECK(qsum == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("EM recovers a well separated two-segment population") {
  const auto truth = gen_lc_ind(two_segment(3, 0.5));
  const auto model = em_fit(truth.graph, 2);
  Segmentation seg;
  seg.K = 2;
  seg.labels = em_assign(model);
  seg.centers = Eigen::Map<const Eigen::VectorXd>(model.alpha.data(), 2);
  const auto aligned = align_labels(seg, AlignMode::by_alpha);
  CHECK(accuracy(aligned.labels, truth.z) > 95.0);
  CHECK(aligned.centers(0, 0) == Approx(0.2).epsilon(0.1));
}

TEST_CASE("assignment and prediction rules") {
  LatentClassModel m;
  m.K = 2;
  m.alpha = {0.7, 0.3};
  m.q = {0.5, 0.5};
  m.responsibilities.resize(3, 2);
  m.responsibilities << 0.1, 0.9, 0.5, 0.5, 1.0, 0.0;
  CHECK(em_assign(m) == std::vector<int>{1, 0, 0});
  CHECK(mixture_prediction(m, 1) == Approx(0.5));
  CHECK(mixture_prediction(m, 2) == Approx(0.7));
  CHECK_THROWS_AS(mixture_prediction(m, 3), ValidationError);
  m.observed = {1, 0, 1};
  CHECK(em_assign(m)[1] == kExcluded);
}

TEST_CASE("EM on a homogeneous population predicts alpha_pool everywhere") {
  SynthSpecInd s = two_segment(5);
  s.alpha = {0.7, 0.7};
  const auto truth = gen_lc_ind(s);
  const auto model = em_fit(truth.graph, 2);
  for (std::size_t i = 0; i < truth.graph.customers(); i += 37) {
    CHECK(mixture_prediction(model, i) == Approx(0.7).epsilon(0.05));
  }
}

TEST_CASE("EM argument checks") {
  const auto g = testing::counts_graph({{1, 1}});
  CHECK_THROWS_AS(em_fit(g, 0), ValidationError);
  const PreferenceGraph empty(LabelAlphabet::binary(), 1, {0}, 1, {{}});
  CHECK_THROWS_AS(em_fit(empty, 1), ValidationError);
}

TEST_CASE("segment sizes use largest remainders") {
  CHECK(segment_sizes(7, std::vector<double>{0.5, 0.3, 0.2}) == std::vector<std::size_t>{4, 2, 1});
  CHECK(segment_sizes(10, std::vector<double>{0.5, 0.5}) == std::vector<std::size_t>{5, 5});
  CHECK(segment_sizes(3, std::vector<double>{0.5, 0.5}) == std::vector<std::size_t>{2, 1});
  const std::vector<double> q = {0.13, 0.27, 0.6};
  const auto sizes = segment_sizes(1001, q);
  for (std::size_t k = 0; k < q.size(); ++k) CHECK(std::abs(static_cast<double>(sizes[k]) - 1001 * q[k]) < 1.0);
  CHECK_THROWS_AS(segment_sizes(10, std::vector<double>{0.5, 0.6}), ValidationError);
}

TEST_CASE("LC-IND generator") {
  auto spec = two_segment(1);
  const auto full = gen_lc_ind(spec);
  for (std::size_t i = 0; i < full.graph.customers(); ++i) CHECK(full.graph.degree(i) == spec.n);

  // Determinism.
  const auto again = gen_lc_ind(spec);
  CHECK(again.z == full.z);
  std::ostringstream a;
  std::ostringstream b;
  write_csv(full.graph, a);
  write_csv(again.graph, b);
  CHECK(a.str() == b.str());

  // Mean degree under p = 0.4: sd of the mean = sqrt(n p (1-p) / m).
  SynthSpecInd sparse = two_segment(2, 0.4);
  sparse.m = 2000;
  sparse.n = 100;
  const auto g = gen_lc_ind(sparse);
  const double mean_degree = static_cast<double>(g.graph.edge_count()) / 2000.0;
  CHECK(std::abs(mean_degree - 40.0) < 3.0 * std::sqrt(100 * 0.4 * 0.6 / 2000.0));

  // Per-segment like-fractions within 3 sigma of alpha_k.
  std::vector<double> likes(2, 0.0);
  std::vector<double> edges(2, 0.0);
  for (std::size_t i = 0; i < g.graph.customers(); ++i) {
    for (const auto& o : g.graph.row(i)) likes[static_cast<std::size_t>(g.z[i])] += o.label == kLike ? 1.0 : 0.0;
    edges[static_cast<std::size_t>(g.z[i])] += static_cast<double>(g.graph.degree(i));
  }
  for (int k = 0; k < 2; ++k) {
    const double a = sparse.alpha[static_cast<std::size_t>(k)];
    CHECK(std::abs(likes[k] / edges[k] - a) < 3.0 * std::sqrt(a * (1 - a) / edges[k]));
  }

  auto bad = spec;
  bad.alpha = {0.0, 0.8};
  CHECK_THROWS_AS(gen_lc_ind(bad), ValidationError);
  bad = spec;
  bad.q = {0.7, 0.4};
  CHECK_THROWS_AS(gen_lc_ind(bad), ValidationError);
}

TEST_CASE("regular generator") {
  SynthSpecInd s = two_segment(4);
  s.m = 1000;
  s.n = 50;
  s.ell = 10;
  const auto t = gen_lc_ind_regular(s);
  std::vector<double> coverage(50, 0.0);
  for (std::size_t i = 0; i < t.graph.customers(); ++i) {
    CHECK(t.graph.degree(i) == 10);
    for (const auto& o : t.graph.row(i)) coverage[o.item] += 1.0;
  }
  // Each item count is Binomial(m, ell / n): mean 200, sd ~ 12.6.
  const double sd = std::sqrt(1000 * 0.2 * 0.8);
  for (double c : coverage) CHECK(std::abs(c - 200.0) < 4.0 * sd);

  s.ell = 50;
  const auto full = gen_lc_ind_regular(s);
  CHECK(full.graph.edge_count() == 1000 * 50);
  s.ell = 51;
  CHECK_THROWS_AS(gen_lc_ind_regular(s), ValidationError);
  s.ell.reset();
  CHECK_THROWS_AS(gen_lc_ind_regular(s), ValidationError);
}

TEST_CASE("LC-IND-CAT generator") {
  SynthSpecCat s;
  s.m = 600;
  s.n_b = {40, 30};
  s.ell_b = {20, 10};
  s.q = {0.5, 0.5};
  s.alpha.resize(2, 2);
  s.alpha << 0.2, 0.6, 0.8, 0.4;
  s.seed = 3;
  const auto t = gen_lc_ind_cat(s);
  CHECK(t.graph.categories() == 2);
  Eigen::MatrixXd likes = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd edges = Eigen::MatrixXd::Zero(2, 2);
  for (std::size_t i = 0; i < t.graph.customers(); ++i) {
    CHECK(category_slice(t.graph, i, 0).size() == 20);
    CHECK(category_slice(t.graph, i, 1).size() == 10);
    for (const auto& o : t.graph.row(i)) {
      const auto b = t.graph.category_of(o.item);
      likes(t.z[i], b) += o.label == kLike ? 1.0 : 0.0;
      edges(t.z[i], b) += 1.0;
    }
  }
  for (int k = 0; k < 2; ++k) {
    for (int b = 0; b < 2; ++b) {
      const double a = s.alpha(k, b);
      CHECK(std::abs(likes(k, b) / edges(k, b) - a) < 3.0 * std::sqrt(a * (1 - a) / edges(k, b)));
    }
  }

  auto round = SynthSpecCat::from_json(s.to_json());
  CHECK(round.alpha == s.alpha);
  CHECK(round.ell_b == s.ell_b);
  CHECK(generate(s.to_json()).z == t.z);

  auto bad = s;
  bad.ell_b = {20, 0};
  CHECK_THROWS_AS(gen_lc_ind_cat(bad), ValidationError);
  bad.ell_b = {41, 10};
  CHECK_THROWS_AS(gen_lc_ind_cat(bad), ValidationError);
}

TEST_CASE("benchmark model sampler") {
  const auto s = sample_table1_model(5, 0.2, 9);
  const std::vector<double> expected = {0.05, 0.275, 0.5, 0.725, 0.95};
  for (std::size_t k = 0; k < 5; ++k) CHECK(s.alpha[k] == Approx(expected[k]));
  CHECK(s.m == 2000);
  CHECK(s.n == 100);
  CHECK(s.p == Approx(0.8));
  const auto two = sample_table1_model(2, 0.0, 1);
  CHECK(two.alpha[0] == Approx(0.05));
  CHECK(two.alpha[1] == Approx(0.95));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = sample_table1_model(7, 0.0, seed);
    double total = 0.0;
    for (double v : t.q) {
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(total == Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(sample_table1_model(1, 0.0, 0), ValidationError);
  CHECK_THROWS_AS(sample_table1_model(3, 1.0, 0), ValidationError);

  const auto round = SynthSpecInd::from_json(s.to_json());
  CHECK(round.q == s.q);
  CHECK(round.seed == s.seed);
}
