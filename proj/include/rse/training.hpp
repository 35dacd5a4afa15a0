#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rse/contrastive.hpp"
#include "rse/model.hpp"

namespace rse {

struct SentenceTriple {
  std::string head;
  std::string relation;
  std::string tail;
  std::optional<std::string> hard_neg;

  bool operator==(const SentenceTriple&) const = default;
};

enum class Objective { Relational, Merged };

struct TrainConfig {
  double tau = 0.05;
  std::size_t batch_size = 64;
  double encoder_lr = 5e-4;
  double relation_lr = 1e-2;
  std::size_t epochs = 3;
  std::size_t eval_every_steps = 125;
  std::size_t per_relation_cap = 150000;
  std::uint64_t seed = 0;
  // 0 disables the gradient cache; otherwise sentences per re-encoding chunk.
  std::size_t sub_batch_size = 0;
  bool hard_negatives = true;
  Objective objective = Objective::Relational;
  EncoderConfig encoder;

  bool operator==(const TrainConfig&) const = default;
};

// Throws Config when a field is out of range. Learning rates may be 0 (frozen).
void validate(const TrainConfig& cfg);

// Reads a JSONL triple file and checks every relation against `schema`.
// Throws Parse (with line number) or Schema.
std::vector<SentenceTriple> ingest_triples(const std::filesystem::path& path,
                                           std::span<const std::string> schema);

// Down-samples each relation to at most `cap` triples, uniformly without
// replacement; the original order of the kept triples is preserved.
std::vector<SentenceTriple> cap_per_relation(std::span<const SentenceTriple> triples,
                                             std::size_t cap, SeededRng& rng);

// Keeps a provided hard negative; otherwise draws a uniform pool tail that
// differs from the gold tail. Throws NoNegative when none exists.
SentenceTriple sample_hard_negative(const SentenceTriple& triple,
                                    std::span<const SentenceTriple> relation_pool,
                                    SeededRng& rng);

// Tracks the best dev metric; ties keep the earliest step.
class CheckpointSelector {
 public:
  explicit CheckpointSelector(std::string metric_name = "dev") : metric_name_(std::move(metric_name)) {}

  // Returns true when the snapshot was taken.
  bool offer(double metric, std::size_t step, const Model& model);

  bool has_snapshot() const noexcept { return best_.has_value(); }
  double best_metric() const noexcept { return best_metric_; }
  std::size_t best_step() const noexcept { return best_step_; }
  const Model& best_model() const { return *best_; }
  const std::string& metric_name() const noexcept { return metric_name_; }

 private:
  std::string metric_name_;
  double best_metric_ = -std::numeric_limits<double>::infinity();
  std::size_t best_step_ = 0;
  std::optional<Model> best_;
};

struct TrainLogRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> dev_metric;
};

struct TrainResult {
  Model model;  // best checkpoint when dev_eval was given, else final
  std::vector<TrainLogRecord> log;
  std::optional<std::size_t> best_step;
  std::optional<double> best_metric;
};

using DevEval = std::function<double(const Model&)>;

// Fresh model for a corpus: vocabulary over heads, tails and hard negatives,
// seeded encoder and relation rows.
Model init_model(std::span<const SentenceTriple> triples, std::vector<std::string> relation_names,
                 const TrainConfig& cfg);

// Epoch loop: seeded shuffle, batching (a trailing batch of < 2 is dropped),
// per-epoch hard negatives, contrastive gradients (gradient cache when
// 0 < sub_batch_size), separate Adam states for encoder and relation rows,
// dev evaluation every eval_every_steps and after the last step.
TrainResult train(std::span<const SentenceTriple> dataset, Model model, const TrainConfig& cfg,
                  const DevEval& dev_eval = {});

struct SyntheticConfig {
  std::size_t filler_tokens = 50;
  std::size_t min_len = 3;
  std::size_t max_len = 6;
  std::size_t heads = 400;
  std::size_t train_heads = 300;
};

struct LinkQuery {
  std::string head;
  std::string relation;
  std::vector<std::string> candidates;
  std::size_t target = 0;
};

// Candidate pools for link prediction: all tails of the queried relation in
// `triples` plus the other relations' tails for the same head. Throws Protocol
// when the gold tail cannot be located.
std::vector<LinkQuery> build_candidate_pools(std::span<const SentenceTriple> triples);

struct SyntheticWorld {
  std::vector<SentenceTriple> train;
  std::vector<SentenceTriple> test;
  std::vector<LinkQuery> pools;  // link-prediction queries over `test`
};

inline constexpr const char* kRelB = "rel_b";
inline constexpr const char* kRelC = "rel_c";

// Heads hold exactly one "A" among filler tokens; rel_b swaps it for "B",
// rel_c for "C". Heads are distinct as token multisets, so no two sentences
// share a mean-pooled embedding.
SyntheticWorld generate_synthetic_world(const SyntheticConfig& cfg, SeededRng& rng);

}  // namespace rse
