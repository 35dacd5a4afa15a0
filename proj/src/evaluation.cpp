#include "rse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "rse/error.hpp"

namespace rse {

namespace {

// Sentence -> embedding memo for one evaluation call.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(const Model& model) : model_(model) {}

  const DenseVector& get(const std::string& sentence) {
    auto it = memo_.find(sentence);
    if (it == memo_.end()) it = memo_.emplace(sentence, embed(model_, sentence)).first;
    return it->second;
  }

 private:
  const Model& model_;
  std::unordered_map<std::string, DenseVector> memo_;
};

template <class F>
auto numeric_guard(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegenerateVector) throw Error(ErrorKind::Numeric, e.what());
    throw;
  }
}

}  // namespace

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> pred, std::span<const double> gold) {
  if (pred.size() != gold.size()) throw Error(ErrorKind::Shape, "spearman: length mismatch");
  if (pred.size() < 2) throw Error(ErrorKind::Shape, "spearman needs at least two values");
  if (!all_finite(pred) || !all_finite(gold)) {
    throw Error(ErrorKind::Numeric, "spearman: non-finite input");
  }
  const auto rp = fractional_ranks(pred);
  const auto rg = fractional_ranks(gold);
  const double n = static_cast<double>(rp.size());
  const double mean = (n + 1.0) / 2.0;  // ranks always average to (n+1)/2
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    const double a = rp[i] - mean;
    const double b = rg[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::DegenerateInput, "spearman of a constant sequence");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EvalReport score_pairs(std::span<const ScoredPair> pairs, const Model& model,
                       const ScoreWeights& weights) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyInput, "no scored pairs to evaluate");
  EmbeddingCache cache(model);
  std::vector<double> pred, gold;
  pred.reserve(pairs.size());
  gold.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!std::isfinite(p.gold_score)) throw Error(ErrorKind::Numeric, "non-finite gold score");
    const auto& a = cache.get(p.sent1);
    const auto& b = cache.get(p.sent2);
    pred.push_back(numeric_guard([&] { return weighted_relational_score(a, b, weights, model.relations); }));
    gold.push_back(p.gold_score);
  }
  EvalReport r;
  r.count = pairs.size();
  r.spearman = spearman(pred, gold);
  return r;
}

double rank_of_target(std::span<const double> scores, std::size_t target_index) {
  if (scores.empty()) throw Error(ErrorKind::EmptyInput, "rank over an empty candidate list");
  if (target_index >= scores.size()) throw Error(ErrorKind::Protocol, "target index out of range");
  const double target = scores[target_index];
  std::size_t above = 0, tied = 0;
  for (std::size_t m = 0; m < scores.size(); ++m) {
    if (m == target_index) continue;
    if (scores[m] > target) ++above;
    else if (scores[m] == target) ++tied;
  }
  return 1.0 + static_cast<double>(above) + 0.5 * static_cast<double>(tied);
}

std::size_t hits_rank(double fractional_rank) {
  return static_cast<std::size_t>(std::floor(fractional_rank + 0.5));
}

namespace {

double rank_with(EmbeddingCache& cache, const Model& model, const std::string& head,
                 RelationId relation, std::span<const std::string> candidates,
                 std::size_t target_index) {
  if (candidates.empty()) throw Error(ErrorKind::EmptyInput, "empty candidate pool");
  if (target_index >= candidates.size()) throw Error(ErrorKind::Protocol, "gold tail missing from pool");
  return numeric_guard([&] {
    const DenseVector query = translate(cache.get(head), relation, model.relations);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const auto& c : candidates) scores.push_back(cosine(query, cache.get(c)));
    return rank_of_target(scores, target_index);
  });
}

}  // namespace

double rank_of_target(const Model& model, std::string_view head, RelationId relation,
                      std::span<const std::string> candidates, std::size_t target_index) {
  EmbeddingCache cache(model);
  return rank_with(cache, model, std::string(head), relation, candidates, target_index);
}

EvalReport summarize_ranks(std::span<const double> ranks) {
  EvalReport r;
  r.count = ranks.size();
  if (ranks.empty()) return r;
  double rr = 0.0;
  std::map<int, std::size_t> hits{{1, 0}, {3, 0}, {10, 0}};
  for (double rank : ranks) {
    rr += 1.0 / rank;
    for (auto& [k, n] : hits) {
      if (hits_rank(rank) <= static_cast<std::size_t>(k)) ++n;
    }
  }
  const double n = static_cast<double>(ranks.size());
  r.mrr = rr / n;
  for (const auto& [k, c] : hits) r.hits_at[k] = static_cast<double>(c) / n;
  return r;
}

EvalReport link_prediction_eval(std::span<const LinkQuery> queries, const Model& model,
                                std::optional<RelationId> score_with) {
  if (queries.empty()) throw Error(ErrorKind::EmptyInput, "no link-prediction queries");
  EmbeddingCache cache(model);
  std::vector<double> all;
  std::map<std::string, std::vector<double>> by_relation;
  for (const auto& q : queries) {
    const auto own = model.relations.find(q.relation);
    if (!own) throw Error(ErrorKind::Schema, "query uses unknown relation '" + q.relation + "'");
    const double rank =
        rank_with(cache, model, q.head, score_with.value_or(*own), q.candidates, q.target);
    all.push_back(rank);
    by_relation[q.relation].push_back(rank);
  }
  EvalReport report = summarize_ranks(all);
  for (const auto& [rel, ranks] : by_relation) report.per_relation[rel] = summarize_ranks(ranks);
  return report;
}

EvalReport link_prediction_eval(std::span<const SentenceTriple> test_triples, const Model& model) {
  const auto pools = build_candidate_pools(test_triples);
  return link_prediction_eval(pools, model);
}

RelationSelectionReport relation_selection_report(
    std::span<const std::pair<std::string, EvalTask>> tasks, const Model& model) {
  RelationSelectionReport out;
  out.relations = model.relations.names();
  out.values = Matrix(tasks.size(), out.relations.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& [name, task] = tasks[t];
    out.tasks.push_back(name);
    for (std::size_t r = 0; r < out.relations.size(); ++r) {
      const RelationId id{static_cast<std::uint32_t>(r)};
      double value = 0.0;
      if (const auto* pairs = std::get_if<std::vector<ScoredPair>>(&task)) {
        value = *score_pairs(*pairs, model, ScoreWeights({{out.relations[r], 1.0}})).spearman;
      } else {
        value = *link_prediction_eval(std::get<std::vector<LinkQuery>>(task), model, id).mrr;
      }
      out.values(t, r) = value;
    }
    const auto row = out.values.row(t);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    out.best_relation.push_back(out.relations[static_cast<std::size_t>(best)]);
  }
  return out;
}

}  // namespace rse
