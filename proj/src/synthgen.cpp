#include "mbseg/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "mbseg/error.hpp"

namespace mbseg {

namespace {

void validate_simplex(std::span<const double> q) {
  if (q.empty()) throw ValidationError("segment proportions are empty");
  double total = 0.0;
  for (double v : q) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("segment proportions must be positive");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("segment proportions must sum to 1 (got " + std::to_string(total) + ")");
  }
}

void validate_alpha(double a) {
  if (!(a > 0.0 && a < 1.0)) throw ValidationError("like-probabilities must lie in (0, 1), got " + std::to_string(a));
}

void validate(const SynthSpecInd& s) {
  if (s.m == 0 || s.n == 0) throw ValidationError("m and n must be positive");
  validate_simplex(s.q);
  if (s.alpha.size() != s.q.size()) throw ValidationError("alpha and q must have the same length");
  for (double a : s.alpha) validate_alpha(a);
  if (!(s.p > 0.0 && s.p <= 1.0)) throw ValidationError("edge probability p must lie in (0, 1]");
  if (s.ell && (*s.ell == 0 || *s.ell > s.n)) throw ValidationError("ell must lie in [1, n]");
}

void validate(const SynthSpecCat& s) {
  if (s.m == 0) throw ValidationError("m must be positive");
  validate_simplex(s.q);
  if (s.alpha.rows() != static_cast<Eigen::Index>(s.q.size())) throw ValidationError("alpha needs one row per segment");
  const auto B = static_cast<std::size_t>(s.alpha.cols());
  if (B == 0) throw ValidationError("at least one category is required");
  if (s.n_b.size() != B || s.ell_b.size() != B) throw ValidationError("n_b and ell_b need one entry per category");
  for (std::size_t b = 0; b < B; ++b) {
    if (s.ell_b[b] == 0) throw ValidationError("every category needs ell_b > 0");
    if (s.ell_b[b] > s.n_b[b]) throw ValidationError("ell_b exceeds n_b in category " + std::to_string(b));
  }
  for (Eigen::Index i = 0; i < s.alpha.size(); ++i) validate_alpha(s.alpha.data()[i]);
}

void shuffle(std::vector<int>& v, RandomStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

// Uniform k-subset of {offset, ..., offset + n - 1} by partial Fisher-Yates.
void sample_subset(std::size_t offset, std::size_t n, std::size_t k, RandomStream& rng,
                   std::vector<std::uint32_t>& scratch, std::vector<std::uint32_t>& out) {
  scratch.resize(n);
  std::iota(scratch.begin(), scratch.end(), static_cast<std::uint32_t>(offset));
  for (std::size_t i = 0; i < k; ++i) std::swap(scratch[i], scratch[i + rng.below(n - i)]);
  out.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k));
}

Observation draw(std::uint32_t item, double alpha, RandomStream& rng) {
  return {item, rng.uniform() < alpha ? kLike : kDislike};
}

GroundTruth generate_ind(const SynthSpecInd& spec, bool regular) {
  validate(spec);
  const RandomStream root(spec.seed);
  auto z = random_partition(spec.m, spec.q, root.split("partition"));
  const RandomStream graph_rng = root.split("graph");
  const RandomStream label_rng = root.split("labels");

  std::vector<std::vector<Observation>> rows(spec.m);
  std::vector<std::uint32_t> scratch;
  std::vector<std::uint32_t> items;
  for (std::size_t i = 0; i < spec.m; ++i) {
    RandomStream g = graph_rng.split(static_cast<std::uint64_t>(i));
    RandomStream l = label_rng.split(static_cast<std::uint64_t>(i));
    const double a = spec.alpha[static_cast<std::size_t>(z[i])];
    if (regular) {
      sample_subset(0, spec.n, *spec.ell, g, scratch, items);
      std::sort(items.begin(), items.end());
    } else {
      items.clear();
      for (std::size_t j = 0; j < spec.n; ++j) {
        if (g.uniform() < spec.p) items.push_back(static_cast<std::uint32_t>(j));
      }
    }
    rows[i].reserve(items.size());
    for (auto j : items) rows[i].push_back(draw(j, a, l));
  }
  PreferenceGraph graph(LabelAlphabet::binary(), spec.n, std::vector<std::uint32_t>(spec.n, 0), 1, std::move(rows));
  return {std::move(graph), std::move(z), spec.to_json()};
}

}  // namespace

std::vector<std::size_t> segment_sizes(std::size_t m, std::span<const double> q) {
  validate_simplex(q);
  std::vector<std::size_t> sizes(q.size());
  std::vector<double> remainder(q.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double exact = static_cast<double>(m) * q[k];
    sizes[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(sizes[k]);
    assigned += sizes[k];
  }
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < m; ++r, ++assigned) ++sizes[order[r % order.size()]];
  return sizes;
}

std::vector<int> random_partition(std::size_t m, std::span<const double> q, RandomStream rng) {
  const auto sizes = segment_sizes(m, q);
  std::vector<int> z;
  z.reserve(m);
  for (std::size_t k = 0; k < sizes.size(); ++k) z.insert(z.end(), sizes[k], static_cast<int>(k));
  shuffle(z, rng);
  return z;
}

std::vector<double> sample_dirichlet(std::span<const double> concentration, RandomStream& rng) {
  std::vector<double> out(concentration.size());
  double total = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(concentration[k] > 0.0)) throw ValidationError("Dirichlet concentration must be positive");
    std::gamma_distribution<double> gamma(concentration[k], 1.0);
    out[k] = gamma(rng);
    total += out[k];
  }
  for (auto& v : out) v /= total;
  return out;
}

GroundTruth gen_lc_ind(const SynthSpecInd& spec) { return generate_ind(spec, spec.ell.has_value()); }

GroundTruth gen_lc_ind_regular(const SynthSpecInd& spec) {
  if (!spec.ell) throw ValidationError("the regular generator needs ell");
  return generate_ind(spec, true);
}

GroundTruth gen_lc_ind_cat(const SynthSpecCat& spec) {
  validate(spec);
  const auto B = static_cast<std::size_t>(spec.B());
  std::vector<std::size_t> offset(B + 1, 0);
  for (std::size_t b = 0; b < B; ++b) offset[b + 1] = offset[b] + spec.n_b[b];
  std::vector<std::uint32_t> category_of(offset[B]);
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(category_of.begin() + static_cast<std::ptrdiff_t>(offset[b]),
              category_of.begin() + static_cast<std::ptrdiff_t>(offset[b + 1]), static_cast<std::uint32_t>(b));
  }

  const RandomStream root(spec.seed);
  auto z = random_partition(spec.m, spec.q, root.split("partition"));
  const RandomStream graph_rng = root.split("graph");
  const RandomStream label_rng = root.split("labels");
  std::vector<std::vector<Observation>> rows(spec.m);
  std::vector<std::uint32_t> scratch;
  std::vector<std::uint32_t> items;
  for (std::size_t i = 0; i < spec.m; ++i) {
    RandomStream g = graph_rng.split(static_cast<std::uint64_t>(i));
    RandomStream l = label_rng.split(static_cast<std::uint64_t>(i));
    for (std::size_t b = 0; b < B; ++b) {
      sample_subset(offset[b], spec.n_b[b], spec.ell_b[b], g, scratch, items);
      std::sort(items.begin(), items.end());
      const double a = spec.alpha(z[i], static_cast<Eigen::Index>(b));
      for (auto j : items) rows[i].push_back(draw(j, a, l));
    }
  }
  PreferenceGraph graph(LabelAlphabet::binary(), offset[B], std::move(category_of), B, std::move(rows));
  return {std::move(graph), std::move(z), spec.to_json()};
}

GroundTruth generate(const nlohmann::json& spec) {
  const auto model = spec.value("model", std::string("lc-ind"));
  if (model == "lc-ind") return gen_lc_ind(SynthSpecInd::from_json(spec));
  if (model == "lc-ind-cat") return gen_lc_ind_cat(SynthSpecCat::from_json(spec));
  throw ValidationError("unknown synthetic model '" + model + "' (expected lc-ind|lc-ind-cat)");
}

SynthSpecInd sample_table1_model(int K, double sparsity, std::uint64_t seed) {
  if (K < 2) throw ValidationError("the benchmark sampler needs K >= 2");
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw ValidationError("sparsity must lie in [0, 1)");
  SynthSpecInd spec;
  spec.m = 2000;
  spec.n = 100;
  spec.p = 1.0 - sparsity;
  spec.seed = seed;
  spec.alpha.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) spec.alpha[static_cast<std::size_t>(k)] = 0.05 + 0.9 * k / (K - 1);
  RandomStream rng = RandomStream(seed).split("proportions");
  const std::vector<double> conc(static_cast<std::size_t>(K), static_cast<double>(K + 1));
  spec.q = sample_dirichlet(conc, rng);
  return spec;
}

void write_truth_csv(const GroundTruth& truth, std::ostream& out) {
  out << "customer,true_segment\n";
  for (std::size_t i = 0; i < truth.z.size(); ++i) out << truth.graph.customer_id(i) << ',' << truth.z[i] << '\n';
}

nlohmann::json SynthSpecInd::to_json() const {
  nlohmann::json doc = {{"model", "lc-ind"}, {"m", m}, {"n", n}, {"q", q}, {"alpha", alpha}, {"p", p}, {"seed", seed}};
  if (ell) doc["ell"] = *ell;
  return doc;
}

SynthSpecInd SynthSpecInd::from_json(const nlohmann::json& doc) {
  SynthSpecInd s;
  try {
    s.m = doc.value("m", s.m);
    s.n = doc.value("n", s.n);
    s.q = doc.at("q").get<std::vector<double>>();
    s.alpha = doc.at("alpha").get<std::vector<double>>();
    s.p = doc.value("p", s.p);
    if (doc.contains("ell") && !doc["ell"].is_null()) s.ell = doc["ell"].get<std::size_t>();
    s.seed = doc.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad lc-ind spec: ") + e.what());
  }
  validate(s);
  return s;
}

nlohmann::json SynthSpecCat::to_json() const {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(alpha.rows()));
  for (Eigen::Index k = 0; k < alpha.rows(); ++k) {
    for (Eigen::Index b = 0; b < alpha.cols(); ++b) rows[static_cast<std::size_t>(k)].push_back(alpha(k, b));
  }
  return {{"model", "lc-ind-cat"}, {"m", m},         {"n_b", n_b},  {"q", q},
          {"alpha", rows},         {"ell_b", ell_b}, {"seed", seed}};
}

SynthSpecCat SynthSpecCat::from_json(const nlohmann::json& doc) {
  SynthSpecCat s;
  try {
    s.m = doc.value("m", s.m);
    s.n_b = doc.at("n_b").get<std::vector<std::size_t>>();
    s.q = doc.at("q").get<std::vector<double>>();
    s.ell_b = doc.at("ell_b").get<std::vector<std::size_t>>();
    s.seed = doc.value("seed", s.seed);
    const auto rows = doc.at("alpha").get<std::vector<std::vector<double>>>();
    const std::size_t B = rows.empty() ? 0 : rows.front().size();
    s.alpha.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(B));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != B) throw ValidationError("alpha rows differ in length");
      for (std::size_t b = 0; b < B; ++b) s.alpha(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b)) = rows[k][b];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad lc-ind-cat spec: ") + e.what());
  }
  validate(s);
  return s;
}

}  // namespace mbseg
