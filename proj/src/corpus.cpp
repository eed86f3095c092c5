#include "mbseg/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mbseg/error.hpp"
#include "mbseg/random.hpp"

namespace mbseg {

LabelAlphabet::LabelAlphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 2) {
    throw ValidationError("label alphabet needs at least 2 symbols");
  }
  std::unordered_set<std::string> seen;
  for (const auto& s : symbols_) {
    if (s.empty()) throw ValidationError("label alphabet contains an empty symbol");
    if (!seen.insert(s).second) throw ValidationError("duplicate label symbol '" + s + "'");
  }
}

LabelAlphabet LabelAlphabet::binary() { return LabelAlphabet({"+1", "-1"}); }

const std::string& LabelAlphabet::symbol(std::size_t index) const {
  if (index >= symbols_.size()) throw ValidationError("label index out of range");
  return symbols_[index];
}

std::optional<std::size_t> LabelAlphabet::find(std::string_view symbol) const {
  for (std::size_t k = 0; k < symbols_.size(); ++k) {
    if (symbols_[k] == symbol) return k;
  }
  return std::nullopt;
}

bool LabelAlphabet::is_binary() const { return *this == binary(); }

PreferenceGraph::PreferenceGraph(LabelAlphabet alphabet, std::size_t items, std::vector<std::uint32_t> category_of,
                                 std::size_t categories, std::vector<std::vector<Observation>> rows, GraphIds ids)
    : alphabet_(std::move(alphabet)),
      category_of_(std::move(category_of)),
      categories_(categories),
      category_sizes_(categories, 0),
      ids_(std::move(ids)) {
  if (categories_ == 0) throw ValidationError("graph needs at least one category");
  if (category_of_.size() != items) throw ValidationError("category_of must have one entry per item");
  for (auto b : category_of_) {
    if (b >= categories_) throw ValidationError("item category index out of range");
    ++category_sizes_[b];
  }
  for (std::size_t b = 0; b < categories_; ++b) {
    if (category_sizes_[b] == 0) {
      throw ValidationError("category " + std::to_string(b) + " contains no items");
    }
  }
  if (!ids_.customers.empty() && ids_.customers.size() != rows.size()) {
    throw ValidationError("customer id count does not match row count");
  }
  if (!ids_.items.empty() && ids_.items.size() != items) {
    throw ValidationError("item id count does not match item count");
  }
  if (!ids_.categories.empty() && ids_.categories.size() != categories_) {
    throw ValidationError("category name count does not match category count");
  }

  offsets_.reserve(rows.size() + 1);
  offsets_.push_back(0);
  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  observations_.reserve(total);

  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end(), [](const Observation& a, const Observation& b) { return a.item < b.item; });
    for (std::size_t e = 0; e < r.size(); ++e) {
      if (r[e].item >= items) throw ValidationError("item index out of range in row " + std::to_string(i));
      if (r[e].label >= alphabet_.size()) {
        throw ValidationError("label index out of range in row " + std::to_string(i));
      }
      if (e > 0 && r[e].item == r[e - 1].item) {
        throw ValidationError("duplicate observation for customer " + std::to_string(i) + " and item " +
                              std::to_string(r[e].item));
      }
    }
    observations_.insert(observations_.end(), r.begin(), r.end());
    offsets_.push_back(observations_.size());
  }
}

std::span<const Observation> PreferenceGraph::row(std::size_t customer) const {
  if (customer >= customers()) throw ValidationError("customer index out of range");
  return {observations_.data() + offsets_[customer], offsets_[customer + 1] - offsets_[customer]};
}

std::size_t PreferenceGraph::degree(std::size_t customer) const {
  if (customer >= customers()) throw ValidationError("customer index out of range");
  return offsets_[customer + 1] - offsets_[customer];
}

std::uint32_t PreferenceGraph::category_of(std::size_t item) const {
  if (item >= items()) throw ValidationError("item index out of range");
  return category_of_[item];
}

std::size_t PreferenceGraph::category_size(std::size_t category) const {
  if (category >= categories_) throw ValidationError("category index out of range");
  return category_sizes_[category];
}

std::string PreferenceGraph::customer_id(std::size_t customer) const {
  if (customer >= customers()) throw ValidationError("customer index out of range");
  return ids_.customers.empty() ? "c" + std::to_string(customer) : ids_.customers[customer];
}

std::string PreferenceGraph::item_id(std::size_t item) const {
  if (item >= items()) throw ValidationError("item index out of range");
  return ids_.items.empty() ? "j" + std::to_string(item) : ids_.items[item];
}

std::string PreferenceGraph::category_name(std::size_t category) const {
  if (category >= categories_) throw ValidationError("category index out of range");
  return ids_.categories.empty() ? "b" + std::to_string(category) : ids_.categories[category];
}

std::optional<std::size_t> PreferenceGraph::find_customer(std::string_view id) const {
  for (std::size_t i = 0; i < customers(); ++i) {
    if (customer_id(i) == id) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> PreferenceGraph::zero_degree_customers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < customers(); ++i) {
    if (offsets_[i + 1] == offsets_[i]) out.push_back(i);
  }
  return out;
}

std::size_t degree(const PreferenceGraph& graph, std::size_t customer) { return graph.degree(customer); }

std::vector<Observation> category_slice(const PreferenceGraph& graph, std::size_t customer, std::size_t category) {
  if (category >= graph.categories()) throw ValidationError("category index out of range");
  std::vector<Observation> out;
  for (const auto& obs : graph.row(customer)) {
    if (graph.category_of(obs.item) == category) out.push_back(obs);
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_fields(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ValidationError("line " + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

template <typename Map>
std::uint32_t intern(Map& index, std::vector<std::string>& names, const std::string& key) {
  auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(names.size()));
  if (inserted) names.push_back(key);
  return it->second;
}

}  // namespace

PreferenceGraph read_csv(std::istream& in, const ParseOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  bool has_category = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto header = split_fields(line, line_no);
    if (header.size() == 3 && header[0] == "customer" && header[1] == "item" && header[2] == "label") {
      has_category = false;
    } else if (header.size() == 4 && header[0] == "customer" && header[1] == "item" && header[2] == "label" &&
               header[3] == "category") {
      has_category = true;
    } else {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": expected header 'customer,item,label' or 'customer,item,label,category'");
    }
    break;
  }
  if (line_no == 0) throw ValidationError("empty input: missing header row");

  std::vector<std::string> symbols = options.alphabet;
  const bool infer_symbols = options.mode == LabelMode::categorical && symbols.empty();
  std::unordered_map<std::string, std::uint32_t> symbol_index;
  for (std::size_t k = 0; k < symbols.size(); ++k) symbol_index.emplace(symbols[k], static_cast<std::uint32_t>(k));

  std::unordered_map<std::string, std::uint32_t> customer_index;
  std::unordered_map<std::string, std::uint32_t> item_index;
  std::unordered_map<std::string, std::uint32_t> category_index;
  GraphIds ids;
  std::vector<std::uint32_t> category_of;
  std::vector<std::vector<Observation>> rows;
  std::vector<std::unordered_set<std::uint32_t>> seen;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, line_no);
    const std::size_t expected = has_category ? 4 : 3;
    if (fields.size() != expected) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " + std::to_string(expected) +
                            " fields, found " + std::to_string(fields.size()));
    }
    const std::string& cust = fields[0];
    const std::string& item = fields[1];
    const std::string& label = fields[2];
    if (cust.empty() || item.empty()) {
      throw ValidationError("line " + std::to_string(line_no) + ": empty customer or item id");
    }
    if (label.empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty label");

    std::uint32_t label_idx = 0;
    if (options.mode == LabelMode::binary) {
      if (label == "+1" || label == "1") {
        label_idx = kLike;
      } else if (label == "-1") {
        label_idx = kDislike;
      } else {
        throw ValidationError("line " + std::to_string(line_no) + ": unknown binary label '" + label + "'");
      }
    } else if (auto it = symbol_index.find(label); it != symbol_index.end()) {
      label_idx = it->second;
    } else if (infer_symbols) {
      label_idx = intern(symbol_index, symbols, label);
    } else {
      throw ValidationError("line " + std::to_string(line_no) + ": unknown label '" + label + "'");
    }

    const std::uint32_t c = intern(customer_index, ids.customers, cust);
    if (c == rows.size()) {
      rows.emplace_back();
      seen.emplace_back();
    }
    const std::size_t items_before = ids.items.size();
    const std::uint32_t j = intern(item_index, ids.items, item);

    std::uint32_t b = 0;
    if (has_category) {
      if (fields[3].empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty category");
      b = intern(category_index, ids.categories, fields[3]);
    }
    if (ids.items.size() > items_before) {
      category_of.push_back(b);
    } else if (category_of[j] != b) {
      throw ValidationError("line " + std::to_string(line_no) + ": item '" + item + "' appears under categories '" +
                            ids.categories[category_of[j]] + "' and '" + fields[3] + "'");
    }

    if (!seen[c].insert(j).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate observation for customer '" + cust +
                            "' and item '" + item + "'");
    }
    rows[c].push_back({j, label_idx});
  }

  LabelAlphabet alphabet = options.mode == LabelMode::binary ? LabelAlphabet::binary() : LabelAlphabet(symbols);
  const std::size_t categories = has_category ? std::max<std::size_t>(1, ids.categories.size()) : 1;
  const std::size_t items = ids.items.size();
  return PreferenceGraph(std::move(alphabet), items, std::move(category_of), categories, std::move(rows),
                         std::move(ids));
}

PreferenceGraph load_csv(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_csv(in, options);
}

void write_csv(const PreferenceGraph& graph, std::ostream& out) {
  const bool with_category = graph.has_category_names() || graph.categories() > 1;
  out << (with_category ? "customer,item,label,category\n" : "customer,item,label\n");
  for (std::size_t i = 0; i < graph.customers(); ++i) {
    const std::string cust = quote_if_needed(graph.customer_id(i));
    for (const auto& obs : graph.row(i)) {
      out << cust << ',' << quote_if_needed(graph.item_id(obs.item)) << ','
          << quote_if_needed(graph.alphabet().symbol(obs.label));
      if (with_category) out << ',' << quote_if_needed(graph.category_name(graph.category_of(obs.item)));
      out << '\n';
    }
  }
}

void save_csv(const PreferenceGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_csv(graph, out);
}

HoldoutSplit split_holdout(const PreferenceGraph& graph, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  const RandomStream root = RandomStream(seed).split("holdout");
  std::vector<std::vector<Observation>> train(graph.customers());
  std::vector<std::vector<Observation>> test(graph.customers());
  for (std::size_t i = 0; i < graph.customers(); ++i) {
    RandomStream rng = root.split(i);
    for (const auto& obs : graph.row(i)) {
      (rng.uniform() < test_fraction ? test[i] : train[i]).push_back(obs);
    }
  }

  GraphIds ids;
  for (std::size_t i = 0; i < graph.customers(); ++i) ids.customers.push_back(graph.customer_id(i));
  for (std::size_t j = 0; j < graph.items(); ++j) ids.items.push_back(graph.item_id(j));
  if (graph.has_category_names()) {
    for (std::size_t b = 0; b < graph.categories(); ++b) ids.categories.push_back(graph.category_name(b));
  }
  std::vector<std::uint32_t> category_of(graph.items());
  for (std::size_t j = 0; j < graph.items(); ++j) category_of[j] = graph.category_of(j);

  return {PreferenceGraph(graph.alphabet(), graph.items(), category_of, graph.categories(), std::move(train), ids),
          PreferenceGraph(graph.alphabet(), graph.items(), category_of, graph.categories(), std::move(test), ids)};
}

}  // namespace mbseg
