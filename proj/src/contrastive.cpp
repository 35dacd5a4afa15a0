#include "rse/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rse/error.hpp"
#include "rse/kernels.hpp"

namespace rse {

namespace {

struct Prepared {
  std::vector<DenseVector> queries;
  std::vector<double> query_norms;
  std::vector<const DenseVector*> candidates;  // tails then hard negatives
  std::vector<double> candidate_norms;
};

double checked_norm(std::span<const double> v, const char* what, std::size_t index) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorKind::Numeric, std::string("degenerate ") + what + " vector at index " +
                                        std::to_string(index));
  }
  return n;
}

Prepared prepare(const EmbeddedBatch& batch, const RelationTable& relations,
                 LossVariant variant) {
  const std::size_t n = batch.size();
  const bool hard = variant == LossVariant::HardNegative;
  if (!(batch.tau > 0.0) || !std::isfinite(batch.tau)) {
    throw Error(ErrorKind::Config, "temperature must be > 0");
  }
  if (n == 0 || (!hard && n < 2)) {
    throw Error(ErrorKind::BatchSize,
                "contrastive batch of size " + std::to_string(n) + " has no in-batch negatives");
  }
  if (batch.tails.size() != n || batch.relations.size() != n) {
    throw Error(ErrorKind::Shape, "heads, tails and relations must have equal length");
  }
  if (hard && (!batch.hard_neg_tails || batch.hard_neg_tails->size() != n)) {
    throw Error(ErrorKind::Schema, "hard-negative loss needs one hard negative per example");
  }
  const std::size_t d = batch.heads.front().size();
  auto check_dim = [d](const DenseVector& v) {
    if (v.size() != d) throw Error(ErrorKind::Shape, "batch vectors must share one dimension");
  };

  Prepared p;
  p.queries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    check_dim(batch.heads[i]);
    if (variant == LossVariant::Merged) {
      p.queries.push_back(batch.heads[i]);
    } else {
      p.queries.push_back(translate(batch.heads[i], batch.relations[i], relations));
    }
    p.query_norms.push_back(checked_norm(p.queries.back(), "translated head", i));
  }
  for (std::size_t m = 0; m < n; ++m) {
    check_dim(batch.tails[m]);
    p.candidates.push_back(&batch.tails[m]);
    p.candidate_norms.push_back(checked_norm(batch.tails[m], "tail", m));
  }
  if (hard) {
    for (std::size_t m = 0; m < n; ++m) {
      const auto& neg = (*batch.hard_neg_tails)[m];
      check_dim(neg);
      p.candidates.push_back(&neg);
      p.candidate_norms.push_back(checked_norm(neg, "hard-negative", m));
    }
  }
  return p;
}

struct Forward {
  LossResult loss;
  std::vector<std::vector<double>> cosines;  // [i][m]
  std::vector<std::vector<double>> probs;    // softmax over candidates
};

Forward forward(const Prepared& p, double tau) {
  const std::size_t n = p.queries.size();
  const std::size_t c = p.candidates.size();
  Forward f;
  f.cosines.assign(n, std::vector<double>(c));
  f.probs.assign(n, std::vector<double>(c));
  f.loss.per_example.resize(n);
  std::vector<double> logits(c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < c; ++m) {
      const double dot = kernels::dot(p.queries[i], *p.candidates[m]);
      const double cs = std::clamp(dot / (p.query_norms[i] * p.candidate_norms[m]), -1.0, 1.0);
      f.cosines[i][m] = cs;
      logits[m] = cs / tau;
    }
    const double lse = log_sum_exp(logits);
    for (std::size_t m = 0; m < c; ++m) f.probs[i][m] = std::exp(logits[m] - lse);
    const double top = *std::max_element(logits.begin(), logits.end());
    if (logits[i] == top) {
      // log1p(sum_{m != i} exp(l_m - l_i))
      double rest = 0.0;
      for (std::size_t m = 0; m < c; ++m) {
        if (m != i) rest += std::exp(logits[m] - logits[i]);
      }
      f.loss.per_example[i] = std::log1p(rest);
    } else {
      f.loss.per_example[i] = lse - logits[i];
    }
    total += f.loss.per_example[i];
  }
  f.loss.loss = total / static_cast<double>(n);
  if (!std::isfinite(f.loss.loss)) throw Error(ErrorKind::Numeric, "non-finite contrastive loss");
  return f;
}

}  // namespace

LossResult batch_loss(const EmbeddedBatch& batch, const RelationTable& relations,
                      LossVariant variant) {
  return forward(prepare(batch, relations, variant), batch.tau).loss;
}

LossResult loss_in_batch(const EmbeddedBatch& batch, const RelationTable& relations) {
  return batch_loss(batch, relations, LossVariant::InBatch);
}

LossResult loss_hard_neg(const EmbeddedBatch& batch, const RelationTable& relations) {
  return batch_loss(batch, relations, LossVariant::HardNegative);
}

LossResult baseline_merged_loss(const EmbeddedBatch& batch, const RelationTable& relations) {
  return batch_loss(batch, relations, LossVariant::Merged);
}

BatchGradients loss_gradients(const EmbeddedBatch& batch, const RelationTable& relations,
                              LossVariant variant) {
  const Prepared p = prepare(batch, relations, variant);
  Forward f = forward(p, batch.tau);
  const std::size_t n = batch.size();
  const std::size_t c = p.candidates.size();
  const std::size_t d = batch.heads.front().size();
  const double inv_n = 1.0 / static_cast<double>(n);

  BatchGradients g;
  g.loss = std::move(f.loss);
  g.heads.assign(n, DenseVector(d, 0.0));
  std::vector<DenseVector> cand_grads(c, DenseVector(d, 0.0));
  g.relation_rows = Matrix(relations.size(), relations.dim());

  // dL/dlogit_im = (p_im - [m == i]) / N and dcos/dq = c/(|q||c|) - cos q/|q|^2.
  // p_ii - 1 is taken as minus the other probabilities.
  for (std::size_t i = 0; i < n; ++i) {
    const double nq = p.query_norms[i];
    double others = 0.0;
    for (std::size_t m = 0; m < c; ++m) {
      if (m != i) others += f.probs[i][m];
    }
    double self_coeff = 0.0;
    for (std::size_t m = 0; m < c; ++m) {
      const double weight = (m == i ? -others : f.probs[i][m]) * inv_n / batch.tau;
      if (weight == 0.0) continue;
      const double nc = p.candidate_norms[m];
      const double cs = f.cosines[i][m];
      kernels::axpy(weight / (nq * nc), *p.candidates[m], g.heads[i]);
      self_coeff -= weight * cs / (nq * nq);
      kernels::axpy(weight / (nq * nc), p.queries[i], cand_grads[m]);
      kernels::axpy(-weight * cs / (nc * nc), *p.candidates[m], cand_grads[m]);
    }
    kernels::axpy(self_coeff, p.queries[i], g.heads[i]);
  }
  if (variant != LossVariant::Merged) {
    for (std::size_t i = 0; i < n; ++i) {
      kernels::axpy(1.0, g.heads[i], g.relation_rows.row(batch.relations[i].value));
    }
  }
  g.tails.assign(cand_grads.begin(), cand_grads.begin() + static_cast<std::ptrdiff_t>(n));
  if (variant == LossVariant::HardNegative) {
    g.hard_neg_tails.assign(cand_grads.begin() + static_cast<std::ptrdiff_t>(n), cand_grads.end());
  }
  return g;
}

namespace {

// Sentence k of the flattened order: heads, tails, hard negatives.
const TokenizedSentence& sentence_at(std::span<const TokenizedTriple> triples, std::size_t k) {
  const std::size_t n = triples.size();
  if (k < n) return triples[k].head;
  if (k < 2 * n) return triples[k - n].tail;
  return *triples[k - 2 * n].hard_neg;
}

std::size_t sentence_count(std::span<const TokenizedTriple> triples, LossVariant variant) {
  if (variant == LossVariant::HardNegative) {
    for (std::size_t i = 0; i < triples.size(); ++i) {
      if (!triples[i].hard_neg) {
        throw Error(ErrorKind::Schema,
                    "triple " + std::to_string(i) + " has no hard negative for the hard-negative loss");
      }
    }
    return 3 * triples.size();
  }
  return 2 * triples.size();
}

EmbeddedBatch assemble(std::span<const TokenizedTriple> triples, std::vector<DenseVector> embeds,
                       LossVariant variant, double tau) {
  const std::size_t n = triples.size();
  EmbeddedBatch b;
  b.tau = tau;
  for (const auto& t : triples) b.relations.push_back(t.relation);
  auto take = [&](std::size_t from) {
    std::vector<DenseVector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::move(embeds[from + i]));
    return out;
  };
  b.heads = take(0);
  b.tails = take(n);
  if (variant == LossVariant::HardNegative) b.hard_neg_tails = take(2 * n);
  return b;
}

const DenseVector& upstream_at(const BatchGradients& g, std::size_t k, std::size_t n) {
  if (k < n) return g.heads[k];
  if (k < 2 * n) return g.tails[k - n];
  return g.hard_neg_tails[k - 2 * n];
}

}  // namespace

ModelGradients naive_full_batch_gradients(std::span<const TokenizedTriple> triples,
                                          const EncoderParams& encoder,
                                          const RelationTable& relations, LossVariant variant,
                                          double tau) {
  const std::size_t total = sentence_count(triples, variant);
  std::vector<DenseVector> embeds;
  std::vector<EncodeCache> caches;
  embeds.reserve(total);
  caches.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    auto r = encode_forward(sentence_at(triples, k), encoder);
    embeds.push_back(std::move(r.embedding));
    caches.push_back(std::move(r.cache));
  }
  const auto batch = assemble(triples, std::move(embeds), variant, tau);
  auto g = loss_gradients(batch, relations, variant);

  ModelGradients out{std::move(g.loss), EncoderGradients(encoder), std::move(g.relation_rows)};
  for (std::size_t k = 0; k < total; ++k) {
    encode_backward(caches[k], upstream_at(g, k, triples.size()), encoder, out.encoder);
  }
  return out;
}

ModelGradients grad_cache_step(std::span<const TokenizedTriple> triples,
                               std::size_t sub_batch_size, const EncoderParams& encoder,
                               const RelationTable& relations, LossVariant variant, double tau,
                               GradCacheStats* stats) {
  if (sub_batch_size == 0) throw Error(ErrorKind::Config, "sub_batch_size must be >= 1");
  const std::size_t total = sentence_count(triples, variant);
  GradCacheStats local;

  std::vector<DenseVector> embeds;
  embeds.reserve(total);
  for (std::size_t k = 0; k < total; ++k) embeds.push_back(encode(sentence_at(triples, k), encoder));
  local.sentences_encoded += total;
  const auto batch = assemble(triples, std::move(embeds), variant, tau);
  auto g = loss_gradients(batch, relations, variant);

  ModelGradients out{std::move(g.loss), EncoderGradients(encoder), std::move(g.relation_rows)};
  std::vector<EncodeCache> live;
  live.reserve(sub_batch_size);
  for (std::size_t start = 0; start < total; start += sub_batch_size) {
    const std::size_t stop = std::min(total, start + sub_batch_size);
    live.clear();
    for (std::size_t k = start; k < stop; ++k) {
      live.push_back(encode_forward(sentence_at(triples, k), encoder).cache);
    }
    local.peak_live_caches = std::max(local.peak_live_caches, live.size());
    local.sentences_encoded += live.size();
    for (std::size_t k = start; k < stop; ++k) {
      encode_backward(live[k - start], upstream_at(g, k, triples.size()), encoder, out.encoder);
    }
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace rse
