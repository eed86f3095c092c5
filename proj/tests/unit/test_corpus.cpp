#include <doctest.h>

#include <set>
#include <sstream>

#include "helpers.hpp"
#include "mbseg/corpus.hpp"
#include "mbseg/error.hpp"
#include "mbseg/random.hpp"

using namespace mbseg;
using testing::graph_from;

TEST_CASE("random stream is deterministic and splits independently") {
  RandomStream a(7);
  RandomStream b(7);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());

  const RandomStream root(7);
  RandomStream x = root.split("partition");
  RandomStream y = root.split("labels");
  RandomStream x2 = root.split("partition");
  CHECK(x() != y());
  x = root.split("partition");
  CHECK(x() == x2());
  CHECK(root.split(std::uint64_t{0}).key() != root.split(std::uint64_t{1}).key());

  RandomStream r(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(r.below(7) < 7);
  }
  CHECK(r.below(1) == 0);
}

TEST_CASE("uniform draws have the right mean") {
  RandomStream r(11);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += r.uniform();
  // sd of the mean is sqrt(1/12/n) ~ 6.5e-4
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.004));
}

TEST_CASE("label alphabet validation") {
  CHECK_THROWS_AS(LabelAlphabet({"a"}), ValidationError);
  CHECK_THROWS_AS(LabelAlphabet({"a", "a"}), ValidationError);
  CHECK_THROWS_AS(LabelAlphabet({"a", ""}), ValidationError);
  const auto bin = LabelAlphabet::binary();
  CHECK(bin.is_binary());
  CHECK(bin.symbol(kLike) == "+1");
  CHECK(bin.find("-1") == std::optional<std::size_t>(kDislike));
  CHECK_FALSE(LabelAlphabet({"-1", "+1"}).is_binary());
}

TEST_CASE("read_csv builds a dense graph in first-appearance order") {
  const auto g = graph_from(
      "customer,item,label\n"
      "alice,x,+1\n"
      "bob,y,-1\n"
      "alice,y,1\n"
      "\"carol, jr\",x,-1\n");
  CHECK(g.customers() == 3);
  CHECK(g.items() == 2);
  CHECK(g.categories() == 1);
  CHECK(g.edge_count() == 4);
  CHECK(g.customer_id(0) == "alice");
  CHECK(g.customer_id(2) == "carol, jr");
  CHECK(g.item_id(1) == "y");
  CHECK(g.degree(0) == 2);
  CHECK(g.row(0)[0] == Observation{0, kLike});
  CHECK(g.row(0)[1] == Observation{1, kLike});
  CHECK(g.row(1)[0] == Observation{1, kDislike});
  CHECK(g.find_customer("bob") == std::optional<std::size_t>(1));
  CHECK_FALSE(g.find_customer("dave").has_value());
}

TEST_CASE("read_csv categories") {
  const auto g = graph_from(
      "customer,item,label,category\n"
      "a,x,+1,books\n"
      "a,y,-1,music\n"
      "b,z,+1,books\n");
  CHECK(g.categories() == 2);
  CHECK(g.category_name(0) == "books");
  CHECK(g.category_of(2) == 0);
  CHECK(g.category_size(0) == 2);
  const auto slice = category_slice(g, 0, 1);
  REQUIRE(slice.size() == 1);
  CHECK(slice[0].item == 1);
  CHECK(category_slice(g, 1, 1).empty());
}

TEST_CASE("read_csv reports malformed rows with line numbers") {
  auto message = [](const std::string& csv) {
    try {
      (void)graph_from(csv);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("customer,item,label\na,x,+1\na,x,-1\n").find("line 3") != std::string::npos);
  CHECK(message("customer,item,label\na,x,+1\na,x,-1\n").find("duplicate") != std::string::npos);
  CHECK(message("customer,item,label\na,x,maybe\n").find("line 2") != std::string::npos);
  CHECK(message("customer,item,label\na,x,\n").find("empty label") != std::string::npos);
  CHECK(message("customer,item,label,category\na,x,+1,c1\nb,x,+1,c2\n").find("line 3") != std::string::npos);
  CHECK(message("user,item,label\n").find("no error") == std::string::npos);
  CHECK(message("").find("header") != std::string::npos);
}

TEST_CASE("categorical labels") {
  ParseOptions opts;
  opts.mode = LabelMode::categorical;
  const auto g = graph_from("customer,item,label\na,x,click\na,y,buy\nb,x,view\n", opts);
  CHECK(g.alphabet().symbols() == std::vector<std::string>{"click", "buy", "view"});
  CHECK(g.row(1)[0].label == 2);

  opts.alphabet = {"view", "click", "buy"};
  const auto h = graph_from("customer,item,label\na,x,click\n", opts);
  CHECK(h.row(0)[0].label == 1);
  CHECK_THROWS_AS(graph_from("customer,item,label\na,x,rate\n", opts), ValidationError);
}

TEST_CASE("write_csv round trip") {
  const auto g = graph_from(
      "customer,item,label,category\n"
      "a,x,+1,books\n"
      "a,y,-1,music\n"
      "b,z,+1,books\n");
  std::ostringstream out;
  write_csv(g, out);
  const auto h = graph_from(out.str());
  CHECK(h.customers() == g.customers());
  CHECK(h.categories() == g.categories());
  for (std::size_t i = 0; i < g.customers(); ++i) {
    REQUIRE(h.degree(i) == g.degree(i));
    for (std::size_t e = 0; e < g.degree(i); ++e) {
      CHECK(h.item_id(h.row(i)[e].item) == g.item_id(g.row(i)[e].item));
      CHECK(h.row(i)[e].label == g.row(i)[e].label);
    }
  }
}

TEST_CASE("graph constructor validates invariants") {
  const auto bin = LabelAlphabet::binary();
  CHECK_THROWS_AS(PreferenceGraph(bin, 2, {0, 0}, 1, {{{0, 0}, {0, 1}}}), ValidationError);
  CHECK_THROWS_AS(PreferenceGraph(bin, 2, {0, 0}, 1, {{{2, 0}}}), ValidationError);
  CHECK_THROWS_AS(PreferenceGraph(bin, 2, {0, 0}, 2, {{{0, 0}}}), ValidationError);
  const PreferenceGraph g(bin, 2, {0, 0}, 1, {{{1, 0}, {0, 1}}, {}});
  CHECK(g.row(0)[0].item == 0);
  CHECK(g.zero_degree_customers() == std::vector<std::size_t>{1});
  CHECK(g.customer_id(1) == "c1");
}

TEST_CASE("holdout split partitions every observation") {
  std::ostringstream csv;
  csv << "customer,item,label\n";
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 40; ++j) csv << "u" << i << ",i" << j << ',' << ((i + j) % 3 ? "+1" : "-1") << '\n';
  }
  const auto g = graph_from(csv.str());
  const auto split = split_holdout(g, 0.25, 9);
  CHECK(split.train.edge_count() + split.test.edge_count() == g.edge_count());
  CHECK(split.train.customers() == g.customers());
  CHECK(split.test.customer_id(7) == g.customer_id(7));
  const double frac = static_cast<double>(split.test.edge_count()) / static_cast<double>(g.edge_count());
  // binomial sd = sqrt(0.25 * 0.75 / 2000) ~ 0.0097
  CHECK(std::abs(frac - 0.25) < 0.04);
  for (std::size_t i = 0; i < g.customers(); ++i) {
    std::set<std::uint32_t> items;
    for (const auto& o : split.train.row(i)) items.insert(o.item);
    for (const auto& o : split.test.row(i)) CHECK(items.insert(o.item).second);
    CHECK(items.size() == g.degree(i));
  }
  CHECK_THROWS_AS(split_holdout(g, 1.0, 1), ValidationError);
}
