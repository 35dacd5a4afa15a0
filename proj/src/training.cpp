#include "rse/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "rse/error.hpp"
#include "rse/io.hpp"

namespace rse {

namespace {

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\n\r\f\v") == std::string_view::npos;
}

// Uniform index into `tails` whose string differs from `gold`.
std::size_t draw_negative(std::span<const std::string* const> tails, const std::string& gold,
                          SeededRng& rng) {
  // Rejection first; fall back to an exact count for pools dominated by the gold tail.
  for (int attempt = 0; attempt < 32; ++attempt) {
    const auto k = static_cast<std::size_t>(rng.uniform_index(tails.size()));
    if (*tails[k] != gold) return k;
  }
  std::vector<std::size_t> eligible;
  for (std::size_t k = 0; k < tails.size(); ++k) {
    if (*tails[k] != gold) eligible.push_back(k);
  }
  if (eligible.empty()) {
    throw Error(ErrorKind::NoNegative, "relation pool holds no tail other than the gold tail");
  }
  return eligible[static_cast<std::size_t>(rng.uniform_index(eligible.size()))];
}

}  // namespace

void validate(const TrainConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) fail("tau must be > 0");
  if (cfg.batch_size < 2) fail("batch_size must be >= 2");
  if (!(cfg.encoder_lr >= 0.0) || !std::isfinite(cfg.encoder_lr)) fail("encoder_lr must be >= 0");
  if (!(cfg.relation_lr >= 0.0) || !std::isfinite(cfg.relation_lr)) fail("relation_lr must be >= 0");
  if (cfg.eval_every_steps == 0) fail("eval_every_steps must be >= 1");
  if (cfg.per_relation_cap == 0) fail("per_relation_cap must be >= 1");
  if (cfg.encoder.d_in == 0 || cfg.encoder.d == 0) fail("encoder dimensions must be >= 1");
  if (cfg.encoder.max_len == 0) fail("max_len must be >= 1");
  if (cfg.encoder.min_count == 0) fail("min_count must be >= 1");
}

std::vector<SentenceTriple> ingest_triples(const std::filesystem::path& path,
                                           std::span<const std::string> schema) {
  std::vector<std::size_t> lines;
  auto triples = read_triples_jsonl(path, &lines);
  const std::set<std::string_view> known(schema.begin(), schema.end());
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (!known.contains(triples[i].relation)) {
      throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(lines[i]) +
                                         ": unknown relation '" + triples[i].relation + "'");
    }
  }
  return triples;
}

std::vector<SentenceTriple> cap_per_relation(std::span<const SentenceTriple> triples,
                                             std::size_t cap, SeededRng& rng) {
  if (cap == 0) throw Error(ErrorKind::Config, "per-relation cap must be >= 1");
  std::map<std::string, std::vector<std::size_t>> by_relation;
  for (std::size_t i = 0; i < triples.size(); ++i) by_relation[triples[i].relation].push_back(i);

  std::vector<bool> keep(triples.size(), true);
  for (auto& [name, idx] : by_relation) {
    if (idx.size() <= cap) continue;
    // Partial Fisher-Yates: the first `cap` slots become a uniform subset.
    for (std::size_t i = 0; i < cap; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_index(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = cap; i < idx.size(); ++i) keep[idx[i]] = false;
  }
  std::vector<SentenceTriple> out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (keep[i]) out.push_back(triples[i]);
  }
  return out;
}

SentenceTriple sample_hard_negative(const SentenceTriple& triple,
                                    std::span<const SentenceTriple> relation_pool,
                                    SeededRng& rng) {
  if (triple.hard_neg) return triple;
  if (relation_pool.empty()) throw Error(ErrorKind::NoNegative, "empty relation pool");
  std::vector<const std::string*> tails;
  tails.reserve(relation_pool.size());
  for (const auto& t : relation_pool) tails.push_back(&t.tail);
  SentenceTriple out = triple;
  out.hard_neg = *tails[draw_negative(tails, triple.tail, rng)];
  return out;
}

bool CheckpointSelector::offer(double metric, std::size_t step, const Model& model) {
  if (best_ && !(metric > best_metric_)) return false;
  best_metric_ = metric;
  best_step_ = step;
  best_ = model;
  return true;
}

Model init_model(std::span<const SentenceTriple> triples, std::vector<std::string> relation_names,
                 const TrainConfig& cfg) {
  validate(cfg);
  std::vector<std::string> corpus;
  corpus.reserve(triples.size() * 2);
  for (const auto& t : triples) {
    corpus.push_back(t.head);
    corpus.push_back(t.tail);
    if (t.hard_neg) corpus.push_back(*t.hard_neg);
  }
  SeededRng rng(cfg.seed);
  Model m;
  m.vocab = build_vocab(corpus, cfg.encoder.min_count);
  m.max_len = cfg.encoder.max_len;
  m.encoder = init_encoder(m.vocab.size(), cfg.encoder.d_in, cfg.encoder.d, rng);
  m.relations = init_relation_table(std::move(relation_names), cfg.encoder.d, rng);
  return m;
}

namespace {

struct Prepared {
  std::vector<TokenizedTriple> triples;  // hard_neg only when provided in the data
  std::vector<std::string> tail_text;
  std::vector<std::vector<std::size_t>> pool_of_relation;  // triple indices per relation id
  std::vector<std::vector<const std::string*>> pool_tails;  // parallel to pool_of_relation
};

Prepared prepare(std::span<const SentenceTriple> data, const Model& model) {
  Prepared p;
  p.pool_of_relation.resize(model.relations.size());
  p.triples.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& t = data[i];
    if (blank(t.head) || blank(t.tail)) {
      throw Error(ErrorKind::Schema, "triple " + std::to_string(i + 1) + " has an empty sentence");
    }
    const auto rel = model.relations.find(t.relation);
    if (!rel) {
      throw Error(ErrorKind::Schema,
                  "triple " + std::to_string(i + 1) + ": unknown relation '" + t.relation + "'");
    }
    TokenizedTriple tt{tokenize(t.head, model.vocab, model.max_len), *rel,
                       tokenize(t.tail, model.vocab, model.max_len), std::nullopt};
    if (t.hard_neg) tt.hard_neg = tokenize(*t.hard_neg, model.vocab, model.max_len);
    p.pool_of_relation[rel->value].push_back(i);
    p.triples.push_back(std::move(tt));
    p.tail_text.push_back(t.tail);
  }
  p.pool_tails.resize(p.pool_of_relation.size());
  for (std::size_t r = 0; r < p.pool_of_relation.size(); ++r) {
    for (std::size_t j : p.pool_of_relation[r]) p.pool_tails[r].push_back(&p.tail_text[j]);
  }
  return p;
}

struct Optimizers {
  explicit Optimizers(const Model& m)
      : table(m.encoder.embedding_table.size()),
        weight(m.encoder.projection_weight.size()),
        bias(m.encoder.projection_bias.size()),
        relations(m.relations.embeddings().size()) {}
  AdamState table, weight, bias, relations;
};

void apply(Model& model, const ModelGradients& g, Optimizers& opt, const TrainConfig& cfg,
           bool update_relations) {
  if (cfg.encoder_lr > 0.0) {
    adam_step(model.encoder.embedding_table.flat(), g.encoder.embedding_table.flat(), opt.table,
              cfg.encoder_lr);
    adam_step(model.encoder.projection_weight.flat(), g.encoder.projection_weight.flat(),
              opt.weight, cfg.encoder_lr);
    adam_step(model.encoder.projection_bias, g.encoder.projection_bias, opt.bias, cfg.encoder_lr);
  }
  if (update_relations && cfg.relation_lr > 0.0) {
    adam_step(model.relations.embeddings().flat(), g.relation_rows.flat(), opt.relations,
              cfg.relation_lr);
  }
}

}  // namespace

TrainResult train(std::span<const SentenceTriple> dataset, Model model, const TrainConfig& cfg,
                  const DevEval& dev_eval) {
  validate(cfg);
  validate(model.encoder);
  if (model.encoder.d() != model.relations.dim()) {
    throw Error(ErrorKind::Shape, "encoder output dim differs from relation dim");
  }
  SeededRng rng(cfg.seed);
  const auto capped = cap_per_relation(dataset, cfg.per_relation_cap, rng);
  const Prepared data = prepare(capped, model);
  if (data.triples.size() < 2) {
    throw Error(ErrorKind::BatchSize, "training needs at least two triples after capping");
  }

  const bool merged = cfg.objective == Objective::Merged;
  const LossVariant variant = merged                ? LossVariant::Merged
                              : cfg.hard_negatives ? LossVariant::HardNegative
                                                   : LossVariant::InBatch;
  if (merged) {
    for (double& x : model.relations.embeddings().flat()) x = 0.0;
  }

  Optimizers opt(model);
  CheckpointSelector selector;
  TrainResult result;
  std::size_t step = 0;
  bool evaluated_last = false;

  auto evaluate = [&](TrainLogRecord& record) {
    double metric = 0.0;
    try {
      metric = dev_eval(model);
    } catch (const Error& e) {
      throw Error(e.kind(), "dev evaluation at step " + std::to_string(step) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Numeric,
                  "dev evaluation at step " + std::to_string(step) + ": " + e.what());
    }
    record.dev_metric = metric;
    selector.offer(metric, step, model);
  };

  std::vector<std::size_t> order(data.triples.size());
  std::vector<TokenizedTriple> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_in_place(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      if (stop - start < 2) break;

      batch.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        TokenizedTriple t = data.triples[idx];
        if (variant == LossVariant::HardNegative && !t.hard_neg) {
          const auto r = t.relation.value;
          const auto pick = draw_negative(data.pool_tails[r], data.tail_text[idx], rng);
          t.hard_neg = data.triples[data.pool_of_relation[r][pick]].tail;
        }
        if (variant != LossVariant::HardNegative) t.hard_neg.reset();
        batch.push_back(std::move(t));
      }

      const ModelGradients g =
          (cfg.sub_batch_size > 0 && cfg.sub_batch_size < cfg.batch_size)
              ? grad_cache_step(batch, cfg.sub_batch_size, model.encoder, model.relations, variant,
                                cfg.tau)
              : naive_full_batch_gradients(batch, model.encoder, model.relations, variant,
                                           cfg.tau);
      ++step;
      if (!std::isfinite(g.loss.loss)) {
        throw Error(ErrorKind::Numeric, "non-finite loss at step " + std::to_string(step) +
                                            " (epoch " + std::to_string(epoch) + ")");
      }
      apply(model, g, opt, cfg, !merged);

      TrainLogRecord record{step, epoch, g.loss.loss, std::nullopt};
      evaluated_last = false;
      if (dev_eval && step % cfg.eval_every_steps == 0) {
        evaluate(record);
        evaluated_last = true;
      }
      result.log.push_back(record);
    }
  }
  if (dev_eval && step > 0 && !evaluated_last) evaluate(result.log.back());
  if (dev_eval && step == 0) {
    TrainLogRecord record{0, 0, 0.0, std::nullopt};
    evaluate(record);
  }

  if (selector.has_snapshot()) {
    result.model = selector.best_model();
    result.best_step = selector.best_step();
    result.best_metric = selector.best_metric();
  } else {
    result.model = std::move(model);
  }
  return result;
}

std::vector<LinkQuery> build_candidate_pools(std::span<const SentenceTriple> triples) {
  std::map<std::string, std::vector<std::string>> tails_of_relation;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_head;
  for (const auto& t : triples) {
    auto& tails = tails_of_relation[t.relation];
    if (std::find(tails.begin(), tails.end(), t.tail) == tails.end()) tails.push_back(t.tail);
    by_head[t.head].emplace_back(t.relation, t.tail);
  }
  std::vector<LinkQuery> out;
  out.reserve(triples.size());
  for (const auto& t : triples) {
    LinkQuery q{t.head, t.relation, tails_of_relation[t.relation], 0};
    for (const auto& [rel, tail] : by_head[t.head]) {
      if (rel != t.relation &&
          std::find(q.candidates.begin(), q.candidates.end(), tail) == q.candidates.end()) {
        q.candidates.push_back(tail);
      }
    }
    const auto it = std::find(q.candidates.begin(), q.candidates.end(), t.tail);
    if (it == q.candidates.end()) {
      throw Error(ErrorKind::Protocol, "gold tail missing from candidate pool");
    }
    q.target = static_cast<std::size_t>(it - q.candidates.begin());
    out.push_back(std::move(q));
  }
  return out;
}

SyntheticWorld generate_synthetic_world(const SyntheticConfig& cfg, SeededRng& rng) {
  if (cfg.filler_tokens == 0 || cfg.min_len < 1 || cfg.max_len < cfg.min_len || cfg.heads == 0 ||
      cfg.train_heads > cfg.heads) {
    throw Error(ErrorKind::Config, "invalid synthetic world parameters");
  }
  std::vector<std::string> fillers;
  for (std::size_t i = 0; i < cfg.filler_tokens; ++i) {
    fillers.push_back("w" + std::string(i < 10 ? "0" : "") + std::to_string(i));
  }

  std::set<std::vector<std::size_t>> seen_bags;
  std::vector<std::vector<std::string>> heads;
  std::size_t attempts = 0;
  while (heads.size() < cfg.heads) {
    if (++attempts > cfg.heads * 1000) {
      throw Error(ErrorKind::Config, "synthetic vocabulary too small for distinct heads");
    }
    const std::size_t len = cfg.min_len + rng.uniform_index(cfg.max_len - cfg.min_len + 1);
    const std::size_t marker = rng.uniform_index(len);
    std::vector<std::string> toks(len);
    std::vector<std::size_t> bag;
    for (std::size_t k = 0; k < len; ++k) {
      if (k == marker) {
        toks[k] = "A";
        continue;
      }
      const auto f = static_cast<std::size_t>(rng.uniform_index(fillers.size()));
      toks[k] = fillers[f];
      bag.push_back(f);
    }
    std::sort(bag.begin(), bag.end());
    if (!seen_bags.insert(bag).second) continue;
    heads.push_back(std::move(toks));
  }

  auto join = [](const std::vector<std::string>& toks, const std::string& marker) {
    std::string s;
    for (std::size_t k = 0; k < toks.size(); ++k) {
      if (k) s += ' ';
      s += toks[k] == "A" ? marker : toks[k];
    }
    return s;
  };

  SyntheticWorld world;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const std::string head = join(heads[h], "A");
    auto& split = h < cfg.train_heads ? world.train : world.test;
    split.push_back({head, kRelB, join(heads[h], "B"), std::nullopt});
    split.push_back({head, kRelC, join(heads[h], "C"), std::nullopt});
  }
  world.pools = build_candidate_pools(world.test);
  return world;
}

}  // namespace rse
