#pragma once

// Relational contrastive objectives over a mini-batch of embedded triples.
//
// For example i with query q_i = h_i + h_r(i) the candidates are all N tails
// (the positive at m = i) and, for the hard-negative variant, all N hard
// negative tails as well. The loss is the mean over examples of
//   -log softmax_i( cos(q_i, c_m) / tau ).
// The merged baseline is the in-batch loss with every relation row taken as 0.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rse/encoder.hpp"
#include "rse/numerics.hpp"
#include "rse/relation_model.hpp"

namespace rse {

enum class LossVariant { InBatch, HardNegative, Merged };

struct EmbeddedBatch {
  std::vector<DenseVector> heads;
  std::vector<DenseVector> tails;
  std::vector<RelationId> relations;
  std::optional<std::vector<DenseVector>> hard_neg_tails;
  double tau = 0.05;

  std::size_t size() const noexcept { return heads.size(); }
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> per_example;
};

// In-batch negatives. Throws BatchSize for N < 2, Shape for ragged input,
// Config for tau <= 0 and Numeric for a zero-norm query or candidate.
LossResult loss_in_batch(const EmbeddedBatch& batch, const RelationTable& relations);

// In-batch plus hard negatives (2N candidates). N = 1 is allowed.
// Throws Schema when hard negatives are missing.
LossResult loss_hard_neg(const EmbeddedBatch& batch, const RelationTable& relations);

// loss_in_batch with all relation rows treated as zero.
LossResult baseline_merged_loss(const EmbeddedBatch& batch, const RelationTable& relations);

LossResult batch_loss(const EmbeddedBatch& batch, const RelationTable& relations,
                      LossVariant variant);

struct BatchGradients {
  LossResult loss;
  std::vector<DenseVector> heads;
  std::vector<DenseVector> tails;
  std::vector<DenseVector> hard_neg_tails;  // empty unless HardNegative
  Matrix relation_rows;                     // shaped like the relation table
};

// Exact gradients of the mean batch loss.
BatchGradients loss_gradients(const EmbeddedBatch& batch, const RelationTable& relations,
                              LossVariant variant);

struct TokenizedTriple {
  TokenizedSentence head;
  RelationId relation;
  TokenizedSentence tail;
  std::optional<TokenizedSentence> hard_neg;
};

struct ModelGradients {
  LossResult loss;
  EncoderGradients encoder;
  Matrix relation_rows;
};

struct GradCacheStats {
  std::size_t peak_live_caches = 0;
  std::size_t sentences_encoded = 0;
};

// Encodes every sentence with caches, then back-propagates all of them.
ModelGradients naive_full_batch_gradients(std::span<const TokenizedTriple> triples,
                                          const EncoderParams& encoder,
                                          const RelationTable& relations, LossVariant variant,
                                          double tau);

// Two-pass gradient cache. Pass 1 embeds every sentence without keeping
// activations and takes the loss gradient w.r.t. the embeddings; pass 2
// re-encodes sub_batch_size sentences at a time (heads, then tails, then hard
// negatives) with caches and back-propagates the stored embedding gradients.
// Sentences are visited in the same order as the naive path, so the result is
// bit-identical to naive_full_batch_gradients. Throws Config for
// sub_batch_size == 0.
ModelGradients grad_cache_step(std::span<const TokenizedTriple> triples,
                               std::size_t sub_batch_size, const EncoderParams& encoder,
                               const RelationTable& relations, LossVariant variant, double tau,
                               GradCacheStats* stats = nullptr);

}  // namespace rse
