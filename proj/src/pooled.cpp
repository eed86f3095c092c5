#include "mbseg/pooled.hpp"

#include <algorithm>
#include <cmath>

#include "mbseg/error.hpp"

namespace mbseg {

namespace {

double clamp_probability(double p, double clamp) { return std::clamp(p, clamp, 1.0 - clamp); }

void require_binary(const PreferenceGraph& graph, const char* who) {
  if (!graph.alphabet().is_binary()) {
    throw ValidationError(std::string(who) + " requires the binary +1/-1 alphabet");
  }
}

void check_label(std::size_t label, std::size_t size) {
  if (label >= size) throw ValidationError("label index out of range");
}

double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

struct BinaryCounts {
  std::vector<double> likes;
  std::vector<double> dislikes;
};

BinaryCounts count_per_item(const PreferenceGraph& graph) {
  BinaryCounts c{std::vector<double>(graph.items(), 0.0), std::vector<double>(graph.items(), 0.0)};
  for (std::size_t i = 0; i < graph.customers(); ++i) {
    for (const auto& obs : graph.row(i)) {
      (obs.label == kLike ? c.likes : c.dislikes)[obs.item] += 1.0;
    }
  }
  return c;
}

}  // namespace

// ---- BernoulliPooled --------------------------------------------------------

BernoulliPooled::BernoulliPooled(double alpha_pool) : alpha_(alpha_pool) {
  if (!(alpha_ > 0.0 && alpha_ < 1.0)) throw ValidationError("Bernoulli pooled parameter must lie in (0, 1)");
  log_like_ = std::log(alpha_);
  log_dislike_ = std::log1p(-alpha_);
  entropy_ = -(alpha_ * log_like_ + (1.0 - alpha_) * log_dislike_);
}

double BernoulliPooled::log_prob(std::size_t /*item*/, std::size_t label) const {
  check_label(label, 2);
  return label == kLike ? log_like_ : log_dislike_;
}

double BernoulliPooled::item_entropy(std::size_t /*item*/) const { return entropy_; }

nlohmann::json BernoulliPooled::to_json() const {
  return {{"family", family()}, {"alphabet", alphabet_.symbols()}, {"parameters", {{"alpha_pool", alpha_}}}};
}

// ---- PerItemBinaryPooled ----------------------------------------------------

PerItemBinaryPooled::PerItemBinaryPooled(std::vector<double> omega) : omega_(std::move(omega)) {
  log_like_.reserve(omega_.size());
  log_dislike_.reserve(omega_.size());
  for (double w : omega_) {
    if (!std::isfinite(w)) throw ValidationError("per-item log-odds must be finite");
    // log sigmoid(w) and log sigmoid(-w) without overflow
    log_like_.push_back(-std::log1p(std::exp(-std::abs(w))) + std::min(w, 0.0));
    log_dislike_.push_back(-std::log1p(std::exp(-std::abs(w))) + std::min(-w, 0.0));
  }
}

double PerItemBinaryPooled::log_prob(std::size_t item, std::size_t label) const {
  if (item >= omega_.size()) throw ValidationError("item index out of range");
  check_label(label, 2);
  return label == kLike ? log_like_[item] : log_dislike_[item];
}

double PerItemBinaryPooled::item_entropy(std::size_t item) const {
  if (item >= omega_.size()) throw ValidationError("item index out of range");
  const double p = std::exp(log_like_[item]);
  const double q = std::exp(log_dislike_[item]);
  return -(p * log_like_[item] + q * log_dislike_[item]);
}

nlohmann::json PerItemBinaryPooled::to_json() const {
  return {{"family", family()}, {"alphabet", alphabet_.symbols()}, {"parameters", {{"omega", omega_}}}};
}

// ---- PerItemCategoricalPooled -----------------------------------------------

PerItemCategoricalPooled::PerItemCategoricalPooled(LabelAlphabet alphabet, std::vector<std::vector<double>> probs)
    : alphabet_(std::move(alphabet)), probs_(std::move(probs)) {
  log_probs_.reserve(probs_.size());
  entropy_.reserve(probs_.size());
  for (const auto& dist : probs_) {
    if (dist.size() != alphabet_.size()) throw ValidationError("distribution size does not match the alphabet");
    double total = 0.0;
    std::vector<double> logs;
    logs.reserve(dist.size());
    for (double p : dist) {
      if (!(p > 0.0 && p <= 1.0)) throw ValidationError("categorical probabilities must lie in (0, 1]");
      total += p;
      logs.push_back(std::log(p));
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("categorical distribution does not sum to 1");
    log_probs_.push_back(std::move(logs));
    entropy_.push_back(entropy_of(dist));
  }
}

double PerItemCategoricalPooled::log_prob(std::size_t item, std::size_t label) const {
  if (item >= probs_.size()) throw ValidationError("item index out of range");
  check_label(label, alphabet_.size());
  return log_probs_[item][label];
}

double PerItemCategoricalPooled::item_entropy(std::size_t item) const {
  if (item >= probs_.size()) throw ValidationError("item index out of range");
  return entropy_[item];
}

nlohmann::json PerItemCategoricalPooled::to_json() const {
  return {{"family", family()}, {"alphabet", alphabet_.symbols()}, {"parameters", {{"probs", probs_}}}};
}

// ---- CategoryPooled ---------------------------------------------------------

CategoryPooled::CategoryPooled(std::vector<double> alpha_by_category, std::vector<std::uint32_t> category_of)
    : alpha_(std::move(alpha_by_category)), category_of_(std::move(category_of)) {
  if (alpha_.empty()) throw ValidationError("category pooled model needs at least one category");
  per_category_.reserve(alpha_.size());
  for (double a : alpha_) per_category_.emplace_back(a);
  for (auto b : category_of_) {
    if (b >= alpha_.size()) throw ValidationError("item category index out of range");
  }
}

BernoulliPooled CategoryPooled::for_category(std::size_t category) const {
  if (category >= per_category_.size()) throw ValidationError("category index out of range");
  return per_category_[category];
}

double CategoryPooled::log_prob(std::size_t item, std::size_t label) const {
  if (item >= category_of_.size()) throw ValidationError("item index out of range");
  return per_category_[category_of_[item]].log_prob(item, label);
}

double CategoryPooled::item_entropy(std::size_t item) const {
  if (item >= category_of_.size()) throw ValidationError("item index out of range");
  return per_category_[category_of_[item]].item_entropy(item);
}

nlohmann::json CategoryPooled::to_json() const {
  return {{"family", family()},
          {"alphabet", alphabet_.symbols()},
          {"parameters", {{"alpha", alpha_}, {"category_of", category_of_}}}};
}

// ---- estimators -------------------------------------------------------------

BernoulliPooled fit_bernoulli(const PreferenceGraph& graph, const PooledOptions& options) {
  require_binary(graph, "fit_bernoulli");
  if (graph.edge_count() == 0) throw ValidationError("fit_bernoulli: graph has no observations");
  std::size_t likes = 0;
  for (std::size_t i = 0; i < graph.customers(); ++i) {
    for (const auto& obs : graph.row(i)) likes += obs.label == kLike ? 1 : 0;
  }
  const double frac = static_cast<double>(likes) / static_cast<double>(graph.edge_count());
  return BernoulliPooled(clamp_probability(frac, options.clamp));
}

PerItemBinaryPooled fit_per_item_binary(const PreferenceGraph& graph, const PooledOptions& options) {
  require_binary(graph, "fit_per_item_binary");
  const auto counts = count_per_item(graph);
  std::vector<double> omega(graph.items(), 0.0);
  for (std::size_t j = 0; j < graph.items(); ++j) {
    if (counts.likes[j] + counts.dislikes[j] == 0.0) continue;
    omega[j] = std::log((counts.likes[j] + options.smoothing) / (counts.dislikes[j] + options.smoothing));
  }
  return PerItemBinaryPooled(std::move(omega));
}

PerItemCategoricalPooled fit_per_item_categorical(const PreferenceGraph& graph, const PooledOptions& options) {
  const std::size_t labels = graph.alphabet().size();
  std::vector<std::vector<double>> counts(graph.items(), std::vector<double>(labels, 0.0));
  for (std::size_t i = 0; i < graph.customers(); ++i) {
    for (const auto& obs : graph.row(i)) counts[obs.item][obs.label] += 1.0;
  }
  for (auto& c : counts) {
    double total = 0.0;
    for (double& x : c) {
      x += options.smoothing;
      total += x;
    }
    if (total == 0.0) {
      std::fill(c.begin(), c.end(), 1.0 / static_cast<double>(labels));
      continue;
    }
    for (double& x : c) x /= total;
  }
  return PerItemCategoricalPooled(graph.alphabet(), std::move(counts));
}

CategoryPooled fit_category_bernoulli(const PreferenceGraph& graph, const PooledOptions& options) {
  require_binary(graph, "fit_category_bernoulli");
  std::vector<double> likes(graph.categories(), 0.0);
  std::vector<double> total(graph.categories(), 0.0);
  for (std::size_t i = 0; i < graph.customers(); ++i) {
    for (const auto& obs : graph.row(i)) {
      const auto b = graph.category_of(obs.item);
      total[b] += 1.0;
      if (obs.label == kLike) likes[b] += 1.0;
    }
  }
  std::vector<double> alpha(graph.categories());
  for (std::size_t b = 0; b < graph.categories(); ++b) {
    if (total[b] == 0.0) {
      throw ValidationError("category '" + graph.category_name(b) + "' has no observations");
    }
    alpha[b] = clamp_probability(likes[b] / total[b], options.clamp);
  }
  std::vector<std::uint32_t> category_of(graph.items());
  for (std::size_t j = 0; j < graph.items(); ++j) category_of[j] = graph.category_of(j);
  return CategoryPooled(std::move(alpha), std::move(category_of));
}

std::string to_string(PooledFamily family) {
  switch (family) {
    case PooledFamily::bernoulli: return "bernoulli";
    case PooledFamily::per_item_binary: return "per_item_binary";
    case PooledFamily::per_item_categorical: return "per_item_categorical";
  }
  return "unknown";
}

PooledFamily parse_pooled_family(const std::string& name) {
  if (name == "bernoulli") return PooledFamily::bernoulli;
  if (name == "per_item_binary") return PooledFamily::per_item_binary;
  if (name == "per_item_categorical") return PooledFamily::per_item_categorical;
  throw ValidationError("unknown pooled family '" + name + "'");
}

PooledModelPtr fit_pooled(const PreferenceGraph& graph, PooledFamily family, const PooledOptions& options) {
  switch (family) {
    case PooledFamily::bernoulli: return std::make_shared<BernoulliPooled>(fit_bernoulli(graph, options));
    case PooledFamily::per_item_binary:
      return std::make_shared<PerItemBinaryPooled>(fit_per_item_binary(graph, options));
    case PooledFamily::per_item_categorical:
      return std::make_shared<PerItemCategoricalPooled>(fit_per_item_categorical(graph, options));
  }
  throw ValidationError("unknown pooled family");
}

std::vector<PooledModelPtr> fit_per_category(const PreferenceGraph& graph, PooledFamily family,
                                             const PooledOptions& options) {
  std::vector<PooledModelPtr> models;
  if (family == PooledFamily::bernoulli) {
    const auto cat = fit_category_bernoulli(graph, options);
    for (std::size_t b = 0; b < graph.categories(); ++b) {
      models.push_back(std::make_shared<BernoulliPooled>(cat.for_category(b)));
    }
    return models;
  }
  const auto shared = fit_pooled(graph, family, options);
  models.assign(graph.categories(), shared);
  return models;
}

double log_prob(const PooledModel& model, std::size_t item, std::size_t label) {
  return model.log_prob(item, label);
}

double item_entropy(const PooledModel& model, std::size_t item) { return model.item_entropy(item); }

PooledModelPtr pooled_from_json(const nlohmann::json& doc) {
  try {
    const auto family = doc.at("family").get<std::string>();
    const auto& params = doc.at("parameters");
    if (family == "bernoulli") {
      return std::make_shared<BernoulliPooled>(params.at("alpha_pool").get<double>());
    }
    if (family == "per_item_binary") {
      return std::make_shared<PerItemBinaryPooled>(params.at("omega").get<std::vector<double>>());
    }
    if (family == "per_item_categorical") {
      return std::make_shared<PerItemCategoricalPooled>(
          LabelAlphabet(doc.at("alphabet").get<std::vector<std::string>>()),
          params.at("probs").get<std::vector<std::vector<double>>>());
    }
    if (family == "category_bernoulli") {
      return std::make_shared<CategoryPooled>(params.at("alpha").get<std::vector<double>>(),
                                              params.at("category_of").get<std::vector<std::uint32_t>>());
    }
    throw ValidationError("unknown pooled family '" + family + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed pooled model JSON: ") + e.what());
  }
}

}  // namespace mbseg
