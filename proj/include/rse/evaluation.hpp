#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rse/model.hpp"
#include "rse/numerics.hpp"
#include "rse/relation_model.hpp"
#include "rse/training.hpp"

namespace rse {

struct ScoredPair {
  std::string sent1;
  std::string sent2;
  double gold_score = 0.0;

  bool operator==(const ScoredPair&) const = default;
};

struct EvalReport {
  std::optional<double> spearman;
  std::optional<double> mrr;
  std::map<int, double> hits_at;  // keys 1, 3, 10
  std::size_t count = 0;
  std::map<std::string, EvalReport> per_relation;
};

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> values);

// Pearson correlation of fractional ranks. Throws Shape on a length mismatch
// or fewer than two values, DegenerateInput when either side is constant.
double spearman(std::span<const double> pred, std::span<const double> gold);

// Weighted relational score per pair, then Spearman against gold.
EvalReport score_pairs(std::span<const ScoredPair> pairs, const Model& model,
                       const ScoreWeights& weights);

// 1 + #(scores above target) + 0.5 * #(other scores equal to target).
double rank_of_target(std::span<const double> scores, std::size_t target_index);

// Ranks used for Hits@k: the fractional rank rounded half up.
std::size_t hits_rank(double fractional_rank);

// Scores every candidate with relational_score(head, candidate, relation).
// Throws Numeric for a degenerate embedding.
double rank_of_target(const Model& model, std::string_view head, RelationId relation,
                      std::span<const std::string> candidates, std::size_t target_index);

// Reduces a list of fractional ranks to MRR and Hits@{1,3,10}.
EvalReport summarize_ranks(std::span<const double> ranks);

// MRR and Hits@k overall and per relation. When `score_with` is given, every
// query is scored under that relation instead of its own.
EvalReport link_prediction_eval(std::span<const LinkQuery> queries, const Model& model,
                                std::optional<RelationId> score_with = std::nullopt);

// Pools from build_candidate_pools over the given triples.
EvalReport link_prediction_eval(std::span<const SentenceTriple> test_triples, const Model& model);

using EvalTask = std::variant<std::vector<ScoredPair>, std::vector<LinkQuery>>;

struct RelationSelectionReport {
  std::vector<std::string> tasks;
  std::vector<std::string> relations;
  Matrix values;  // tasks x relations; Spearman for pair tasks, MRR for link tasks
  std::vector<std::string> best_relation;
};

RelationSelectionReport relation_selection_report(
    std::span<const std::pair<std::string, EvalTask>> tasks, const Model& model);

}  // namespace rse
