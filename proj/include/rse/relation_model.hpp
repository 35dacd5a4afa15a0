#pragma once

// Named relation embeddings and translation-based relational scoring:
// f(s_i, s_j, r) = cos(h_i + h_r, h_j).

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rse/numerics.hpp"

namespace rse {

struct RelationId {
  std::uint32_t value = 0;
  auto operator<=>(const RelationId&) const = default;
};

class RelationTable {
 public:
  RelationTable() = default;
  // Throws Schema for empty/duplicate names and Shape when rows != names.
  RelationTable(std::vector<std::string> names, Matrix embeddings);

  std::size_t size() const noexcept { return names_.size(); }
  std::size_t dim() const noexcept { return embeddings_.cols(); }

  std::optional<RelationId> find(std::string_view name) const;
  // Throws Lookup for an unknown name.
  RelationId id(std::string_view name) const;
  const std::string& name(RelationId id) const;
  const std::vector<std::string>& names() const noexcept { return names_; }

  // Throw Lookup for an out-of-range id.
  std::span<const double> row(RelationId id) const;
  std::span<double> row(RelationId id);

  const Matrix& embeddings() const noexcept { return embeddings_; }
  Matrix& embeddings() noexcept { return embeddings_; }

  bool operator==(const RelationTable&) const = default;

 private:
  void check(RelationId id) const;

  std::vector<std::string> names_;
  Matrix embeddings_;
};

// Rows i.i.d. uniform on [-0.02*sqrt(3), 0.02*sqrt(3)]: zero mean, std 0.02.
RelationTable init_relation_table(std::vector<std::string> names, std::size_t d, SeededRng& rng);

DenseVector translate(std::span<const double> head, RelationId relation,
                      const RelationTable& table);

// cos(h_i + h_r, h_j). Direction-sensitive.
double relational_score(std::span<const double> h_i, std::span<const double> h_j,
                        RelationId relation, const RelationTable& table);

class ScoreWeights {
 public:
  // Throws Schema for negative/non-finite weights, duplicates, or no positive weight.
  explicit ScoreWeights(std::vector<std::pair<std::string, double>> weights);

  const std::vector<std::pair<std::string, double>>& entries() const noexcept { return weights_; }
  double total() const noexcept;

 private:
  std::vector<std::pair<std::string, double>> weights_;
};

// sum_k w_k f(h_i, h_j, r_k). Throws Schema for a weight on an unknown relation.
double weighted_relational_score(std::span<const double> h_i, std::span<const double> h_j,
                                 const ScoreWeights& weights, const RelationTable& table);

// R x R cosine matrix of the relation rows; exactly symmetric.
Matrix relation_similarity_matrix(const RelationTable& table);

}  // namespace rse
