#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mbseg/error.hpp"
#include "mbseg/pooled.hpp"
#include "mbseg/projection.hpp"
#include "mbseg/random.hpp"

using namespace mbseg;
using doctest::Approx;

TEST_CASE("Bernoulli pooled fit and log-probabilities") {
  // 3 likes out of 5 edges.
  const auto g = testing::graph_from("customer,item,label\na,x,+1\na,y,+1\nb,x,-1\nb,z,+1\nc,y,-1\n");
  const auto pooled = fit_bernoulli(g);
  CHECK(pooled.alpha_pool() == Approx(0.6));
  CHECK(pooled.log_prob(0, kLike) == Approx(-0.5108).epsilon(1e-4));
  CHECK(pooled.log_prob(5, kDislike) == Approx(std::log(0.4)));
  CHECK(pooled.item_entropy(0) == Approx(0.6730).epsilon(1e-4));
  CHECK_THROWS_AS(BernoulliPooled(1.0), ValidationError);
  CHECK_THROWS_AS(pooled.log_prob(0, 2), ValidationError);

  const auto all_like = testing::counts_graph({{3, 0}});
  CHECK(fit_bernoulli(all_like).alpha_pool() == Approx(1.0 - 1e-6));
}

TEST_CASE("per-item fits use additive smoothing") {
  // item x: 3 likes, 1 dislike
  const auto g = testing::graph_from("customer,item,label\na,x,+1\nb,x,+1\nc,x,+1\nd,x,-1\nd,y,-1\n");
  const auto binary = fit_per_item_binary(g);
  CHECK(binary.omega()[0] == Approx(0.8473).epsilon(1e-4));
  CHECK(binary.omega()[1] == Approx(std::log(0.5 / 1.5)));
  const double p = 1.0 / (1.0 + std::exp(-binary.omega()[0]));
  CHECK(binary.log_prob(0, kLike) == Approx(std::log(p)));
  CHECK(binary.log_prob(0, kDislike) == Approx(std::log(1.0 - p)));

  ParseOptions opts;
  opts.mode = LabelMode::categorical;
  std::string csv = "customer,item,label\n";
  for (int i = 0; i < 8; ++i) csv += "u" + std::to_string(i) + ",x,a\n";
  csv += "v,x,b\nw,x,c\n";
  const auto c = testing::graph_from(csv, opts);
  const auto cat = fit_per_item_categorical(c);
  CHECK(cat.probs()[0][0] == Approx(8.5 / 11.5));
  CHECK(cat.probs()[0][1] == Approx(1.5 / 11.5));
  CHECK(cat.probs()[0][2] == Approx(1.5 / 11.5));
  const double h = -(8.5 * std::log(8.5 / 11.5) + 2 * 1.5 * std::log(1.5 / 11.5)) / 11.5;
  CHECK(cat.item_entropy(0) == Approx(h));
}

TEST_CASE("pooled models round trip through JSON") {
  const auto g = testing::graph_from(
      "customer,item,label,category\na,x,+1,b1\na,y,-1,b2\nb,x,-1,b1\nb,y,-1,b2\nc,y,+1,b2\n");
  for (auto family : {PooledFamily::bernoulli, PooledFamily::per_item_binary}) {
    const auto model = fit_pooled(g, family);
    const auto back = pooled_from_json(model->to_json());
    for (std::size_t j = 0; j < g.items(); ++j) {
      CHECK(back->log_prob(j, kLike) == model->log_prob(j, kLike));
      CHECK(back->item_entropy(j) == model->item_entropy(j));
    }
  }
  const auto cat = fit_category_bernoulli(g);
  CHECK(cat.alpha()[0] == Approx(0.5));
  CHECK(cat.alpha()[1] == Approx(1.0 / 3.0));
  const auto back = pooled_from_json(cat.to_json());
  CHECK(back->log_prob(1, kLike) == cat.log_prob(1, kLike));
  CHECK(parse_pooled_family("per_item_binary") == PooledFamily::per_item_binary);
  CHECK_THROWS_AS(parse_pooled_family("gaussian"), ValidationError);
}

TEST_CASE("pooled fitting errors") {
  const auto cat = testing::graph_from("customer,item,label\na,x,-1\nb,x,+1\n", {LabelMode::categorical, {}});
  CHECK_THROWS_AS(fit_bernoulli(cat), ValidationError);
  const PreferenceGraph empty(LabelAlphabet::binary(), 1, {0}, 1, {{}});
  CHECK_THROWS_AS(fit_bernoulli(empty), ValidationError);
  CHECK_THROWS_AS(PerItemCategoricalPooled(LabelAlphabet::binary(), {{0.5, 0.6}}), ValidationError);
}

TEST_CASE("projection scores with degree and entropy normalization") {
  // Customer a: 2 likes and 1 dislike under alpha_pool = 0.6.
  const auto g = testing::counts_graph({{2, 1}, {0, 0}});
  const BernoulliPooled pooled(0.6);
  const auto deg = pscore_degree(g, pooled);
  const auto ent = pscore_entropy(g, pooled);
  CHECK(deg.values[0] == Approx(0.6460).epsilon(1e-4));
  CHECK(ent.values[0] == Approx(0.9599).epsilon(1e-4));
  CHECK(deg.size() == 1);  // counts_graph drops customers without rows

  const PreferenceGraph with_empty(LabelAlphabet::binary(), 3, {0, 0, 0}, 1,
                                   {{{0, kLike}, {1, kLike}, {2, kDislike}}, {}});
  const auto s = pscore_entropy(with_empty, pooled);
  CHECK(s.is_present(0));
  CHECK_FALSE(s.is_present(1));
  CHECK(s.present_indices() == std::vector<std::size_t>{0});
  CHECK(s.present_values()[0] == Approx(0.9599).epsilon(1e-4));
}

TEST_CASE("entropy score equals degree score over H(alpha_pool) for the Bernoulli family") {
  RandomStream rng(5);
  std::vector<std::vector<Observation>> rows(300);
  for (auto& row : rows) {
    const auto d = 1 + rng.below(40);
    for (std::uint32_t j = 0; j < d; ++j) row.push_back({j, rng.uniform() < 0.3 ? kLike : kDislike});
  }
  const PreferenceGraph g(LabelAlphabet::binary(), 40, std::vector<std::uint32_t>(40, 0), 1, std::move(rows));
  const auto pooled = fit_bernoulli(g);
  const double a = pooled.alpha_pool();
  const double h = -a * std::log(a) - (1 - a) * std::log(1 - a);
  const auto deg = pscore_degree(g, pooled);
  const auto ent = pscore_entropy(g, pooled);
  for (std::size_t i = 0; i < g.customers(); ++i) CHECK(std::abs(ent.values[i] - deg.values[i] / h) < 1e-12);
}

TEST_CASE("entropy normalization fails on a near-deterministic pooled model") {
  const auto g = testing::counts_graph({{1, 0}});
  const PerItemBinaryPooled sharp(std::vector<double>{60.0});
  CHECK_THROWS_AS(pscore_entropy(g, sharp), NumericalError);
  CHECK_NOTHROW(pscore_degree(g, sharp));
  CHECK_THROWS_AS(pscore_degree(g, PerItemBinaryPooled(std::vector<double>{1.0, 2.0})), ValidationError);
}

TEST_CASE("score matrix marks missing categories") {
  const auto g = testing::graph_from(
      "customer,item,label,category\n"
      "a,x,+1,b1\na,y,-1,b2\n"
      "b,x,-1,b1\n"
      "c,y,+1,b2\nc,z,+1,b2\n");
  const auto models = fit_per_category(g, PooledFamily::bernoulli);
  REQUIRE(models.size() == 2);
  const auto m = pscore_matrix(g, models, Normalization::degree);
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 2);
  CHECK(m.observed(0, 0));
  CHECK(m.observed(0, 1));
  CHECK_FALSE(m.observed(1, 1));
  CHECK_FALSE(m.complete());
  CHECK(m.observed_count() == 4);
  CHECK_THROWS_AS((void)m.at(1, 1), ValidationError);
  // Category b1 like-fraction is 1/2, so each label costs ln 2.
  CHECK(m.at(1, 0) == Approx(std::log(2.0)));
  // Category b2: 2 of 3 likes; customer c has two likes.
  CHECK(m.at(2, 1) == Approx(-std::log(2.0 / 3.0)));
  const Eigen::Index keep[] = {1};
  const auto sub = m.select_columns(keep);
  CHECK(sub.cols() == 1);
  CHECK(sub.row_empty(1));
  CHECK(parse_normalization("entropy") == Normalization::entropy);
  CHECK_THROWS_AS(parse_normalization("z"), ValidationError);
}
