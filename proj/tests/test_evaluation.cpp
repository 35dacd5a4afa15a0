#include "doctest.h"

#include <cmath>

#include "rse/error.hpp"
#include "rse/evaluation.hpp"
#include "test_support.hpp"

using namespace rse;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected rse::Error");
  return ErrorKind::Io;
}

const std::vector<std::string> kSchema = {kRelB, kRelC};

struct Trained {
  SyntheticWorld world;
  Model model;
};

const Trained& trained_world() {
  static const Trained t = [] {
    SeededRng rng(7);
    Trained out{generate_synthetic_world({}, rng), {}};
    TrainConfig cfg;
    out.model = train(out.world.train, init_model(out.world.train, kSchema, cfg), cfg).model;
    return out;
  }();
  return t;
}

Model untrained_model() {
  SeededRng rng(7);
  const auto w = generate_synthetic_world({}, rng);
  return init_model(w.train, kSchema, TrainConfig{});
}

}  // namespace

TEST_CASE("spearman examples") {
  const std::vector<double> a = {1, 2, 3};
  CHECK(spearman(a, std::vector<double>{10, 20, 30}) == 1.0);
  CHECK(spearman(a, std::vector<double>{3, 2, 1}) == -1.0);

  const std::vector<double> pred = {1, 2, 2, 4}, gold = {1, 3, 2, 4};
  const double got = spearman(pred, gold);
  CHECK(std::abs(got - test::brute_spearman(pred, gold)) <= 1e-9);
  CHECK(std::abs(got - 0.9486832980505139) <= 1e-9);  // 4.5 / sqrt(22.5)
}

TEST_CASE("fractional ranks average ties") {
  CHECK(fractional_ranks(std::vector<double>{10, 30, 20, 30}) == std::vector<double>{1, 3.5, 2, 3.5});
  CHECK(fractional_ranks(std::vector<double>{5, 5, 5}) == std::vector<double>{2, 2, 2});
}

TEST_CASE("spearman errors") {
  CHECK(kind_of([] { spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}); }) == ErrorKind::Shape);
  CHECK(kind_of([] { spearman(std::vector<double>{1}, std::vector<double>{1}); }) == ErrorKind::Shape);
  CHECK(kind_of([] { spearman(std::vector<double>{4, 4, 4}, std::vector<double>{1, 2, 3}); }) ==
        ErrorKind::DegenerateInput);
  CHECK(kind_of([] { spearman(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0, 0}); }) ==
        ErrorKind::DegenerateInput);
}

TEST_CASE("spearman agrees with the counting oracle and is monotone invariant") {
  SeededRng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(60);
    std::vector<double> a(n), b(n);
    // small integer ranges force plenty of ties
    for (auto& x : a) x = static_cast<double>(rng.uniform_index(8));
    for (auto& x : b) x = rng.uniform01() < 0.5 ? static_cast<double>(rng.uniform_index(5)) : rng.uniform(-1, 1);
    const bool constant = std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; }) ||
                          std::all_of(b.begin(), b.end(), [&](double x) { return x == b[0]; });
    if (constant) continue;
    const double rho = spearman(a, b);
    CHECK(std::abs(rho - test::brute_spearman(a, b)) <= 1e-9);
    CHECK(rho >= -1.0);
    CHECK(rho <= 1.0);

    std::vector<double> ta(n), tb(n);
    for (std::size_t i = 0; i < n; ++i) {
      ta[i] = std::exp(a[i] / 3.0) + 7.0;
      tb[i] = b[i] * b[i] * b[i] - 2.0;
    }
    CHECK(std::abs(spearman(ta, tb) - rho) <= 1e-12);
  }
}

TEST_CASE("rank_of_target and hits rounding") {
  CHECK(rank_of_target(std::vector<double>{0.9, 0.2, 0.1}, 0) == 1.0);
  CHECK(rank_of_target(std::vector<double>{0.9, 0.9, 0.1}, 0) == 1.5);
  CHECK(hits_rank(1.5) == 2);
  CHECK(hits_rank(1.0) == 1);
  CHECK(hits_rank(2.5) == 3);
  CHECK(summarize_ranks(std::vector<double>{1.5}).hits_at.at(1) == 0.0);
  CHECK(rank_of_target(std::vector<double>{0.1, 0.5, 0.5, 0.5}, 0) == 4.0);
  CHECK(kind_of([] { rank_of_target(std::vector<double>{}, 0); }) == ErrorKind::EmptyInput);
  CHECK(kind_of([] { rank_of_target(std::vector<double>{1.0}, 1); }) == ErrorKind::Protocol);
}

TEST_CASE("rank_of_target matches a stable-sort oracle on 1,000 random pools") {
  SeededRng rng(22);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 10;
    std::vector<double> scores(n);
    for (auto& s : scores) s = static_cast<double>(rng.uniform_index(6)) / 5.0;
    const auto target = rng.uniform_index(n);
    CHECK(rank_of_target(scores, target) == test::sort_rank(scores, target));
  }
}

TEST_CASE("summarize_ranks") {
  const auto r = summarize_ranks(std::vector<double>{1, 2, 4});
  CHECK(std::abs(*r.mrr - 1.75 / 3.0) < 1e-15);
  CHECK(std::abs(*r.mrr - 0.583333) < 1e-6);
  CHECK(r.hits_at.at(1) == 1.0 / 3.0);
  CHECK(r.hits_at.at(3) == 2.0 / 3.0);
  CHECK(r.hits_at.at(10) == 1.0);
  CHECK(r.count == 3);

  const auto perfect = summarize_ranks(std::vector<double>{1, 1, 1, 1});
  CHECK(*perfect.mrr == 1.0);
  for (const auto& [k, v] : perfect.hits_at) CHECK(v == 1.0);
}

TEST_CASE("link_prediction_eval on the untrained model") {
  const auto model = untrained_model();
  SeededRng rng(7);
  const auto w = generate_synthetic_world({}, rng);
  const auto report = link_prediction_eval(w.pools, model);
  REQUIRE(report.mrr);
  CHECK(*report.mrr > 0.0);
  CHECK(*report.mrr <= 1.0);
  CHECK(report.hits_at.at(1) <= report.hits_at.at(3));
  CHECK(report.hits_at.at(3) <= report.hits_at.at(10));

  double weighted = 0;
  std::size_t count = 0;
  for (const auto& [rel, sub] : report.per_relation) {
    weighted += *sub.mrr * static_cast<double>(sub.count);
    count += sub.count;
  }
  CHECK(count == report.count);
  CHECK(std::abs(weighted / static_cast<double>(count) - *report.mrr) <= 1e-12);

  // the triples overload builds the same pools
  CHECK(*link_prediction_eval(w.test, model).mrr == *report.mrr);

  // matches per-query ranks computed directly
  std::vector<double> ranks;
  for (const auto& q : w.pools) {
    ranks.push_back(rank_of_target(model, q.head, model.relations.id(q.relation), q.candidates, q.target));
  }
  CHECK(*summarize_ranks(ranks).mrr == *report.mrr);

  std::vector<LinkQuery> bad = {w.pools[0]};
  bad[0].target = bad[0].candidates.size();
  CHECK(kind_of([&] { link_prediction_eval(bad, model); }) == ErrorKind::Protocol);
  bad[0].target = 0;
  bad[0].relation = "nope";
  CHECK(kind_of([&] { link_prediction_eval(bad, model); }) == ErrorKind::Schema);
}

TEST_CASE("link_prediction_eval with perfect ranking") {
  const auto& t = trained_world();
  // restrict each pool to its gold tail: every target ranks first
  std::vector<LinkQuery> trivial;
  for (auto q : t.world.pools) {
    q.candidates = {q.candidates[q.target]};
    q.target = 0;
    trivial.push_back(q);
  }
  const auto report = link_prediction_eval(trivial, t.model);
  CHECK(*report.mrr == 1.0);
  for (const auto& [k, v] : report.hits_at) CHECK(v == 1.0);
}

TEST_CASE("score_pairs") {
  const auto& t = trained_world();
  const auto& model = t.model;
  std::vector<ScoredPair> pairs;
  for (std::size_t i = 0; i + 1 < t.world.test.size(); i += 2) {
    pairs.push_back({t.world.test[i].head, t.world.test[i].tail, 0.0});
    pairs.push_back({t.world.test[i].head, t.world.test[i + 1].tail, 0.0});
  }
  const ScoreWeights on_b({{kRelB, 1.0}});
  auto self = pairs;
  for (auto& p : self) {
    const auto q = translate(embed(model, p.sent1), model.relations.id(kRelB), model.relations);
    p.gold_score = std::exp(3.0 * cosine(q, embed(model, p.sent2)));
  }
  CHECK(std::abs(*score_pairs(self, model, on_b).spearman - 1.0) <= 1e-9);

  // a weight on a zeroed relation row scores by plain cosine
  Model zeroed = model;
  for (double& x : zeroed.relations.embeddings().row(0)) x = 0.0;
  auto plain = pairs;
  for (auto& p : plain) p.gold_score = cosine(embed(model, p.sent1), embed(model, p.sent2));
  CHECK(std::abs(*score_pairs(plain, zeroed, ScoreWeights({{kRelB, 2.0}})).spearman - 1.0) <= 1e-9);

  CHECK(kind_of([&] { score_pairs(std::vector<ScoredPair>{}, model, on_b); }) == ErrorKind::EmptyInput);
}

TEST_CASE("relation_selection_report") {
  const auto& t = trained_world();
  std::vector<LinkQuery> b_queries, c_queries;
  for (const auto& q : t.world.pools) (q.relation == kRelB ? b_queries : c_queries).push_back(q);

  const std::vector<std::pair<std::string, EvalTask>> tasks = {{"b_task", b_queries}, {"c_task", c_queries}};
  const auto report = relation_selection_report(tasks, t.model);
  CHECK(report.relations == kSchema);
  CHECK(report.best_relation == std::vector<std::string>{kRelB, kRelC});
  CHECK(report.values(0, 0) == *link_prediction_eval(b_queries, t.model).mrr);

  const std::vector<std::pair<std::string, EvalTask>> swapped = {tasks[1], tasks[0]};
  const auto other = relation_selection_report(swapped, t.model);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(other.values(0, r) == report.values(1, r));
    CHECK(other.values(1, r) == report.values(0, r));
  }

  // one task, one relation
  Model single = t.model;
  single.relations = RelationTable({kRelB}, Matrix(1, t.model.relations.dim()));
  for (std::size_t k = 0; k < single.relations.dim(); ++k)
    single.relations.embeddings()(0, k) = t.model.relations.row(t.model.relations.id(kRelB))[k];
  std::vector<ScoredPair> pairs;
  for (std::size_t i = 0; i < 40; ++i)
    pairs.push_back({t.world.test[i].head, t.world.test[i + 1].tail, static_cast<double>(i % 7)});
  const std::vector<std::pair<std::string, EvalTask>> one = {{"pairs", pairs}};
  const auto tiny = relation_selection_report(one, single);
  CHECK(tiny.values.rows() == 1);
  CHECK(tiny.values.cols() == 1);
  CHECK(tiny.values(0, 0) == *score_pairs(pairs, single, ScoreWeights({{kRelB, 1.0}})).spearman);
}
