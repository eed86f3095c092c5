#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mbseg {

/// Ordered set of label symbols. The position of a symbol is its label index.
class LabelAlphabet {
 public:
  explicit LabelAlphabet(std::vector<std::string> symbols);

  /// {"+1", "-1"}: index 0 is "like", index 1 is "dislike".
  static LabelAlphabet binary();

  [[nodiscard]] std::size_t size() const { return symbols_.size(); }
  [[nodiscard]] const std::string& symbol(std::size_t index) const;
  [[nodiscard]] std::optional<std::size_t> find(std::string_view symbol) const;
  [[nodiscard]] const std::vector<std::string>& symbols() const { return symbols_; }
  /// True for the canonical like/dislike alphabet.
  [[nodiscard]] bool is_binary() const;

  friend bool operator==(const LabelAlphabet&, const LabelAlphabet&) = default;

 private:
  std::vector<std::string> symbols_;
};

inline constexpr std::uint32_t kLike = 0;
inline constexpr std::uint32_t kDislike = 1;

struct Observation {
  std::uint32_t item = 0;
  std::uint32_t label = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Original string identifiers kept for reporting. Empty vectors mean
/// "synthesize ids from indices".
struct GraphIds {
  std::vector<std::string> customers;
  std::vector<std::string> items;
  std::vector<std::string> categories;
};

/// Sparse bipartite customer x item graph with categorical edge labels and a
/// partition of the items into categories. Immutable after construction.
class PreferenceGraph {
 public:
  /// Validates every invariant and sorts each row by item index.
  /// Throws ValidationError on out-of-range indices, duplicate
  /// (customer, item) pairs or empty categories.
  PreferenceGraph(LabelAlphabet alphabet, std::size_t items, std::vector<std::uint32_t> category_of,
                  std::size_t categories, std::vector<std::vector<Observation>> rows, GraphIds ids = {});

  [[nodiscard]] std::size_t customers() const { return offsets_.size() - 1; }
  [[nodiscard]] std::size_t items() const { return category_of_.size(); }
  [[nodiscard]] std::size_t categories() const { return categories_; }
  [[nodiscard]] std::size_t edge_count() const { return observations_.size(); }
  [[nodiscard]] const LabelAlphabet& alphabet() const { return alphabet_; }

  [[nodiscard]] std::span<const Observation> row(std::size_t customer) const;
  [[nodiscard]] std::size_t degree(std::size_t customer) const;
  [[nodiscard]] std::uint32_t category_of(std::size_t item) const;
  [[nodiscard]] std::size_t category_size(std::size_t category) const;

  [[nodiscard]] std::string customer_id(std::size_t customer) const;
  [[nodiscard]] std::string item_id(std::size_t item) const;
  [[nodiscard]] std::string category_name(std::size_t category) const;
  /// True when the graph came from (or should export) a category column.
  [[nodiscard]] bool has_category_names() const { return !ids_.categories.empty(); }
  [[nodiscard]] std::optional<std::size_t> find_customer(std::string_view id) const;

  /// Customers with no observations. They stay in the graph but never enter clustering.
  [[nodiscard]] std::vector<std::size_t> zero_degree_customers() const;

 private:
  LabelAlphabet alphabet_;
  std::vector<std::uint32_t> category_of_;
  std::size_t categories_;
  std::vector<std::size_t> category_sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<Observation> observations_;
  GraphIds ids_;
};

[[nodiscard]] std::size_t degree(const PreferenceGraph& graph, std::size_t customer);

/// Observations of `customer` on items of `category`, in item order.
/// An empty result is the "no observation" marker for that category.
[[nodiscard]] std::vector<Observation> category_slice(const PreferenceGraph& graph, std::size_t customer,
                                                     std::size_t category);

enum class LabelMode {
  binary,       // +1/1 -> like, -1 -> dislike
  categorical,  // symbols from ParseOptions::alphabet, or first appearance when empty
};

struct ParseOptions {
  LabelMode mode = LabelMode::binary;
  std::vector<std::string> alphabet;
};

/// Reads `customer,item,label[,category]`. Customers and items are re-indexed
/// densely in first-appearance order. Throws ValidationError with the line
/// number on any malformed row.
[[nodiscard]] PreferenceGraph read_csv(std::istream& in, const ParseOptions& options = {});
[[nodiscard]] PreferenceGraph load_csv(const std::filesystem::path& path, const ParseOptions& options = {});

/// Same schema as read_csv; rows sorted by (customer index, item index).
void write_csv(const PreferenceGraph& graph, std::ostream& out);
void save_csv(const PreferenceGraph& graph, const std::filesystem::path& path);

struct HoldoutSplit {
  PreferenceGraph train;
  PreferenceGraph test;
};

/// Moves each observation to the test graph with probability `test_fraction`.
/// Both graphs keep every customer and item id so indices line up.
[[nodiscard]] HoldoutSplit split_holdout(const PreferenceGraph& graph, double test_fraction, std::uint64_t seed);

}  // namespace mbseg
