#include "mbseg/projection.hpp"

#include <cmath>
#include <ostream>

#include "mbseg/error.hpp"

namespace mbseg {

namespace {

constexpr double kMinEntropy = 1e-12;

void check_compatible(const PreferenceGraph& graph, const PooledModel& model) {
  if (model.alphabet() != graph.alphabet()) {
    throw ValidationError("pooled model alphabet does not match the graph alphabet");
  }
  if (auto n = model.item_count(); n && *n != graph.items()) {
    throw ValidationError("pooled model covers " + std::to_string(*n) + " items but the graph has " +
                          std::to_string(graph.items()));
  }
}

// Accumulates one customer's negative log-likelihood and entropy over a set
// of observations, in the given (item) order.
struct RowTotals {
  double nll = 0.0;
  double entropy = 0.0;
  std::size_t count = 0;
};

template <typename Range>
RowTotals accumulate(const PooledModel& model, const Range& observations) {
  RowTotals t;
  for (const auto& obs : observations) {
    t.nll -= model.log_prob(obs.item, obs.label);
    t.entropy += model.item_entropy(obs.item);
    ++t.count;
  }
  return t;
}

double normalize(const RowTotals& t, Normalization normalization, std::size_t customer) {
  if (normalization == Normalization::degree) return t.nll / static_cast<double>(t.count);
  if (t.entropy < kMinEntropy) {
    throw NumericalError("entropy normalization is degenerate for customer " + std::to_string(customer) +
                         " (pooled entropy " + std::to_string(t.entropy) + ")");
  }
  return t.nll / t.entropy;
}

}  // namespace

std::string to_string(Normalization n) { return n == Normalization::degree ? "degree" : "entropy"; }

Normalization parse_normalization(const std::string& name) {
  if (name == "degree") return Normalization::degree;
  if (name == "entropy") return Normalization::entropy;
  throw ValidationError("unknown normalization '" + name + "' (expected degree|entropy)");
}

std::vector<std::size_t> ScoreVector::present_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (present[i]) out.push_back(i);
  }
  return out;
}

std::vector<double> ScoreVector::present_values() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (present[i]) out.push_back(values[i]);
  }
  return out;
}

ScoreMatrix::ScoreMatrix(Eigen::MatrixXd values, Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> observed)
    : values_(std::move(values)), observed_(std::move(observed)) {
  if (values_.rows() != observed_.rows() || values_.cols() != observed_.cols()) {
    throw ValidationError("score matrix and mask shapes differ");
  }
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index b = 0; b < values_.cols(); ++b) {
      if (!observed_(i, b)) {
        values_(i, b) = 0.0;
      } else if (!std::isfinite(values_(i, b))) {
        throw ValidationError("score matrix holds a non-finite observed entry");
      }
    }
  }
}

double ScoreMatrix::at(Eigen::Index i, Eigen::Index b) const {
  if (!observed_(i, b)) throw ValidationError("score entry is missing");
  return values_(i, b);
}

ScoreVector ScoreMatrix::column(Eigen::Index b) const {
  ScoreVector out;
  out.values.resize(static_cast<std::size_t>(rows()));
  out.present.resize(static_cast<std::size_t>(rows()));
  for (Eigen::Index i = 0; i < rows(); ++i) {
    out.values[static_cast<std::size_t>(i)] = values_(i, b);
    out.present[static_cast<std::size_t>(i)] = observed_(i, b) ? 1 : 0;
  }
  return out;
}

ScoreMatrix ScoreMatrix::select_columns(std::span<const Eigen::Index> columns) const {
  Eigen::MatrixXd v(rows(), static_cast<Eigen::Index>(columns.size()));
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> m(rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] < 0 || columns[c] >= cols()) throw ValidationError("column index out of range");
    v.col(static_cast<Eigen::Index>(c)) = values_.col(columns[c]);
    m.col(static_cast<Eigen::Index>(c)) = observed_.col(columns[c]);
  }
  return {std::move(v), std::move(m)};
}

ScoreVector pscore(const PreferenceGraph& graph, const PooledModel& model, Normalization normalization) {
  check_compatible(graph, model);
  ScoreVector out;
  out.values.assign(graph.customers(), 0.0);
  out.present.assign(graph.customers(), 0);
  for (std::size_t i = 0; i < graph.customers(); ++i) {
    const auto row = graph.row(i);
    if (row.empty()) continue;
    out.values[i] = normalize(accumulate(model, row), normalization, i);
    out.present[i] = 1;
  }
  return out;
}

ScoreVector pscore_degree(const PreferenceGraph& graph, const PooledModel& model) {
  return pscore(graph, model, Normalization::degree);
}

ScoreVector pscore_entropy(const PreferenceGraph& graph, const PooledModel& model) {
  return pscore(graph, model, Normalization::entropy);
}

ScoreMatrix pscore_matrix(const PreferenceGraph& graph, std::span<const PooledModelPtr> models,
                          Normalization normalization) {
  const auto B = graph.categories();
  if (models.size() != B) {
    throw ValidationError("expected one pooled model per category (" + std::to_string(B) + "), got " +
                          std::to_string(models.size()));
  }
  for (const auto& m : models) {
    if (!m) throw ValidationError("null pooled model");
    check_compatible(graph, *m);
  }

  const auto m = static_cast<Eigen::Index>(graph.customers());
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(B));
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> observed =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m, static_cast<Eigen::Index>(B), false);

  std::vector<RowTotals> totals(B);
  for (std::size_t i = 0; i < graph.customers(); ++i) {
    std::fill(totals.begin(), totals.end(), RowTotals{});
    for (const auto& obs : graph.row(i)) {
      const auto b = graph.category_of(obs.item);
      auto& t = totals[b];
      t.nll -= models[b]->log_prob(obs.item, obs.label);
      t.entropy += models[b]->item_entropy(obs.item);
      ++t.count;
    }
    for (std::size_t b = 0; b < B; ++b) {
      if (totals[b].count == 0) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const auto bb = static_cast<Eigen::Index>(b);
      values(ii, bb) = normalize(totals[b], normalization, i);
      observed(ii, bb) = true;
    }
  }
  return {std::move(values), std::move(observed)};
}

void write_scores_csv(const PreferenceGraph& graph, const ScoreMatrix& scores, std::ostream& out) {
  out << "customer,category,score\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index b = 0; b < scores.cols(); ++b) {
      if (!scores.observed(i, b)) continue;
      out << graph.customer_id(static_cast<std::size_t>(i)) << ','
          << graph.category_name(static_cast<std::size_t>(b)) << ',' << scores.values()(i, b) << '\n';
    }
  }
}

}  // namespace mbseg
