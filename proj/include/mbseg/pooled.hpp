#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbseg/corpus.hpp"

namespace mbseg {

/// Knobs for the count-based estimators. Neither is part of the textbook
/// MLE: smoothing keeps per-item log-probabilities finite and the clamp keeps
/// scalar parameters away from {0, 1}.
struct PooledOptions {
  double smoothing = 0.5;
  double clamp = 1e-6;
};

/// Population-level ("pooled") label distribution in product form over items.
class PooledModel {
 public:
  virtual ~PooledModel() = default;

  [[nodiscard]] virtual std::string family() const = 0;
  [[nodiscard]] virtual const LabelAlphabet& alphabet() const = 0;
  /// Number of items the model covers; nullopt when the model ignores the item.
  [[nodiscard]] virtual std::optional<std::size_t> item_count() const = 0;

  /// Natural log of P(label | item). Throws ValidationError on bad indices.
  [[nodiscard]] virtual double log_prob(std::size_t item, std::size_t label) const = 0;
  /// Shannon entropy (nats) of the item's label distribution.
  [[nodiscard]] virtual double item_entropy(std::size_t item) const = 0;

  /// {family, alphabet, parameters}; doubles are written with 17 significant digits.
  [[nodiscard]] virtual nlohmann::json to_json() const = 0;
};

using PooledModelPtr = std::shared_ptr<const PooledModel>;

/// One like-probability shared by every item.
class BernoulliPooled final : public PooledModel {
 public:
  explicit BernoulliPooled(double alpha_pool);

  [[nodiscard]] double alpha_pool() const { return alpha_; }

  [[nodiscard]] std::string family() const override { return "bernoulli"; }
  [[nodiscard]] const LabelAlphabet& alphabet() const override { return alphabet_; }
  [[nodiscard]] std::optional<std::size_t> item_count() const override { return std::nullopt; }
  [[nodiscard]] double log_prob(std::size_t item, std::size_t label) const override;
  [[nodiscard]] double item_entropy(std::size_t item) const override;
  [[nodiscard]] nlohmann::json to_json() const override;

 private:
  double alpha_;
  double log_like_;
  double log_dislike_;
  double entropy_;
  LabelAlphabet alphabet_ = LabelAlphabet::binary();
};

/// Binary logit per item: P(like | j) = 1 / (1 + exp(-omega_j)).
class PerItemBinaryPooled final : public PooledModel {
 public:
  explicit PerItemBinaryPooled(std::vector<double> omega);

  [[nodiscard]] const std::vector<double>& omega() const { return omega_; }

  [[nodiscard]] std::string family() const override { return "per_item_binary"; }
  [[nodiscard]] const LabelAlphabet& alphabet() const override { return alphabet_; }
  [[nodiscard]] std::optional<std::size_t> item_count() const override { return omega_.size(); }
  [[nodiscard]] double log_prob(std::size_t item, std::size_t label) const override;
  [[nodiscard]] double item_entropy(std::size_t item) const override;
  [[nodiscard]] nlohmann::json to_json() const override;

 private:
  std::vector<double> omega_;
  std::vector<double> log_like_;
  std::vector<double> log_dislike_;
  LabelAlphabet alphabet_ = LabelAlphabet::binary();
};

/// Free categorical distribution per item over an arbitrary alphabet.
class PerItemCategoricalPooled final : public PooledModel {
 public:
  PerItemCategoricalPooled(LabelAlphabet alphabet, std::vector<std::vector<double>> probs);

  [[nodiscard]] const std::vector<std::vector<double>>& probs() const { return probs_; }

  [[nodiscard]] std::string family() const override { return "per_item_categorical"; }
  [[nodiscard]] const LabelAlphabet& alphabet() const override { return alphabet_; }
  [[nodiscard]] std::optional<std::size_t> item_count() const override { return probs_.size(); }
  [[nodiscard]] double log_prob(std::size_t item, std::size_t label) const override;
  [[nodiscard]] double item_entropy(std::size_t item) const override;
  [[nodiscard]] nlohmann::json to_json() const override;

 private:
  LabelAlphabet alphabet_;
  std::vector<std::vector<double>> probs_;
  std::vector<std::vector<double>> log_probs_;
  std::vector<double> entropy_;
};

/// One like-probability per item category.
class CategoryPooled final : public PooledModel {
 public:
  CategoryPooled(std::vector<double> alpha_by_category, std::vector<std::uint32_t> category_of);

  [[nodiscard]] const std::vector<double>& alpha() const { return alpha_; }
  [[nodiscard]] const std::vector<std::uint32_t>& category_of() const { return category_of_; }
  /// The single-category restriction, usable as a per-column model for score matrices.
  [[nodiscard]] BernoulliPooled for_category(std::size_t category) const;

  [[nodiscard]] std::string family() const override { return "category_bernoulli"; }
  [[nodiscard]] const LabelAlphabet& alphabet() const override { return alphabet_; }
  [[nodiscard]] std::optional<std::size_t> item_count() const override { return category_of_.size(); }
  [[nodiscard]] double log_prob(std::size_t item, std::size_t label) const override;
  [[nodiscard]] double item_entropy(std::size_t item) const override;
  [[nodiscard]] nlohmann::json to_json() const override;

 private:
  std::vector<double> alpha_;
  std::vector<std::uint32_t> category_of_;
  std::vector<BernoulliPooled> per_category_;
  LabelAlphabet alphabet_ = LabelAlphabet::binary();
};

/// Like-fraction over all edges, clamped to [clamp, 1 - clamp].
[[nodiscard]] BernoulliPooled fit_bernoulli(const PreferenceGraph& graph, const PooledOptions& options = {});
/// omega_j = log((likes_j + s) / (dislikes_j + s)).
[[nodiscard]] PerItemBinaryPooled fit_per_item_binary(const PreferenceGraph& graph,
                                                      const PooledOptions& options = {});
/// (count_j(label) + s) / (d_j + s * |alphabet|).
[[nodiscard]] PerItemCategoricalPooled fit_per_item_categorical(const PreferenceGraph& graph,
                                                                const PooledOptions& options = {});
/// Like-fraction per category, clamped. Throws if a category has no observations.
[[nodiscard]] CategoryPooled fit_category_bernoulli(const PreferenceGraph& graph, const PooledOptions& options = {});

enum class PooledFamily { bernoulli, per_item_binary, per_item_categorical };

[[nodiscard]] std::string to_string(PooledFamily family);
[[nodiscard]] PooledFamily parse_pooled_family(const std::string& name);

/// Whole-graph pooled model of the requested family.
[[nodiscard]] PooledModelPtr fit_pooled(const PreferenceGraph& graph, PooledFamily family,
                                        const PooledOptions& options = {});
/// One pooled model per category. The Bernoulli family is fit separately per
/// category; per-item families are fit once and shared (they are already
/// product-form, so restricting to a category is just restricting the items).
[[nodiscard]] std::vector<PooledModelPtr> fit_per_category(const PreferenceGraph& graph, PooledFamily family,
                                                           const PooledOptions& options = {});

[[nodiscard]] double log_prob(const PooledModel& model, std::size_t item, std::size_t label);
[[nodiscard]] double item_entropy(const PooledModel& model, std::size_t item);

/// Inverse of PooledModel::to_json.
[[nodiscard]] PooledModelPtr pooled_from_json(const nlohmann::json& doc);

}  // namespace mbseg
