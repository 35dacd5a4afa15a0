#include "rse/relation_model.hpp"

#include <cmath>
#include <set>

#include "rse/error.hpp"
#include "rse/kernels.hpp"

namespace rse {

RelationTable::RelationTable(std::vector<std::string> names, Matrix embeddings)
    : names_(std::move(names)), embeddings_(std::move(embeddings)) {
  if (names_.empty()) throw Error(ErrorKind::Schema, "relation table needs at least one relation");
  std::set<std::string_view> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error(ErrorKind::Schema, "empty relation name");
    if (!seen.insert(n).second) throw Error(ErrorKind::Schema, "duplicate relation name '" + n + "'");
  }
  if (embeddings_.rows() != names_.size() || embeddings_.cols() == 0) {
    throw Error(ErrorKind::Shape, "relation embeddings must have one nonempty row per name");
  }
}

std::optional<RelationId> RelationTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return RelationId{static_cast<std::uint32_t>(i)};
  }
  return std::nullopt;
}

RelationId RelationTable::id(std::string_view name) const {
  if (auto r = find(name)) return *r;
  throw Error(ErrorKind::Lookup, "unknown relation '" + std::string(name) + "'");
}

void RelationTable::check(RelationId id) const {
  if (id.value >= names_.size()) {
    throw Error(ErrorKind::Lookup, "relation id " + std::to_string(id.value) + " out of range");
  }
}

const std::string& RelationTable::name(RelationId id) const {
  check(id);
  return names_[id.value];
}

std::span<const double> RelationTable::row(RelationId id) const {
  check(id);
  return embeddings_.row(id.value);
}

std::span<double> RelationTable::row(RelationId id) {
  check(id);
  return embeddings_.row(id.value);
}

RelationTable init_relation_table(std::vector<std::string> names, std::size_t d, SeededRng& rng) {
  if (d == 0) throw Error(ErrorKind::Config, "relation dimension must be positive");
  Matrix rows(names.size(), d);
  const double bound = 0.02 * std::sqrt(3.0);
  for (double& x : rows.flat()) x = rng.uniform(-bound, bound);
  return RelationTable(std::move(names), std::move(rows));
}

DenseVector translate(std::span<const double> head, RelationId relation,
                      const RelationTable& table) {
  const auto r = table.row(relation);
  if (head.size() != r.size()) {
    throw Error(ErrorKind::Shape, "head dim " + std::to_string(head.size()) +
                                      " != relation dim " + std::to_string(r.size()));
  }
  DenseVector out(head.begin(), head.end());
  kernels::axpy(1.0, r, out);
  return out;
}

double relational_score(std::span<const double> h_i, std::span<const double> h_j,
                        RelationId relation, const RelationTable& table) {
  return cosine(translate(h_i, relation, table), h_j);
}

ScoreWeights::ScoreWeights(std::vector<std::pair<std::string, double>> weights)
    : weights_(std::move(weights)) {
  std::set<std::string_view> seen;
  bool any_positive = false;
  for (const auto& [name, w] : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorKind::Schema, "weight for '" + name + "' must be finite and >= 0");
    }
    if (!seen.insert(name).second) throw Error(ErrorKind::Schema, "duplicate weight for '" + name + "'");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw Error(ErrorKind::Schema, "at least one relation weight must be > 0");
}

double ScoreWeights::total() const noexcept {
  double t = 0.0;
  for (const auto& [name, w] : weights_) t += w;
  return t;
}

double weighted_relational_score(std::span<const double> h_i, std::span<const double> h_j,
                                 const ScoreWeights& weights, const RelationTable& table) {
  double score = 0.0;
  for (const auto& [name, w] : weights.entries()) {
    const auto id = table.find(name);
    if (!id) throw Error(ErrorKind::Schema, "weight references unknown relation '" + name + "'");
    if (w == 0.0) continue;
    score += w * relational_score(h_i, h_j, *id, table);
  }
  return score;
}

Matrix relation_similarity_matrix(const RelationTable& table) {
  const std::size_t n = table.size();
  Matrix out(n, n);
  const auto& rows = table.embeddings();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      const double c = cosine(rows.row(a), rows.row(b));
      out(a, b) = c;
      out(b, a) = c;
    }
  }
  return out;
}

}  // namespace rse
