#pragma once

// Reference sentence encoder: h = tanh(W^T mean(E[ids]) + b).
//
// E is the |V| x d_in token-embedding table, W the d_in x d projection and b
// the d-dim bias. The forward pass can keep a cache so the exact gradient of
// any scalar loss of h can be pushed back into (E, W, b).

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rse/numerics.hpp"

namespace rse {

using TokenId = std::uint32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr std::size_t kDefaultMaxLen = 32;

class Vocab {
 public:
  static constexpr std::string_view kPadToken = "[PAD]";
  static constexpr std::string_view kUnkToken = "[UNK]";

  // Rebuilds a vocabulary from its id-ordered token list. The first two
  // entries must be the PAD and UNK tokens; throws Vocabulary otherwise.
  static Vocab from_tokens(std::vector<std::string> id_to_token);

  // Unknown tokens map to kUnkId. The token is expected to be lowercased.
  TokenId lookup(std::string_view token) const;

  std::size_t size() const noexcept { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return id_to_token_; }

  bool operator==(const Vocab& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

// Lowercases ASCII letters; other bytes pass through unchanged.
std::string ascii_lower(std::string_view s);

// Lowercased whitespace-delimited tokens.
std::vector<std::string> split_tokens(std::string_view sentence);

// Tokens seen at least min_count times, ordered by (count desc, token asc)
// after PAD and UNK. Throws EmptyInput for an empty corpus.
Vocab build_vocab(std::span<const std::string> corpus, std::size_t min_count = 1);

struct TokenizedSentence {
  std::vector<TokenId> ids;
};

// Throws EmptySentence when the sentence has no tokens.
TokenizedSentence tokenize(std::string_view sentence, const Vocab& vocab,
                           std::size_t max_len = kDefaultMaxLen);

struct EncoderConfig {
  std::size_t d_in = 32;
  std::size_t d = 32;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t min_count = 1;

  bool operator==(const EncoderConfig&) const = default;
};

struct EncoderParams {
  Matrix embedding_table;    // |V| x d_in
  Matrix projection_weight;  // d_in x d
  DenseVector projection_bias;

  std::size_t vocab_size() const noexcept { return embedding_table.rows(); }
  std::size_t d_in() const noexcept { return embedding_table.cols(); }
  std::size_t d() const noexcept { return projection_bias.size(); }
  std::size_t parameter_count() const noexcept {
    return embedding_table.size() + projection_weight.size() + projection_bias.size();
  }

  bool operator==(const EncoderParams&) const = default;
};

// Table rows ~ U(-sqrt(3), sqrt(3)) (unit variance), W Glorot-uniform, b = 0.
EncoderParams init_encoder(std::size_t vocab_size, std::size_t d_in, std::size_t d,
                           SeededRng& rng);

// Throws Shape when the blocks disagree or Numeric when an entry is non-finite.
void validate(const EncoderParams& params);

struct EncodeCache {
  const EncoderParams* params = nullptr;
  std::vector<TokenId> ids;
  DenseVector pooled;
  DenseVector pre_activation;
  DenseVector output;
};

// Embedding only; no activations retained.
DenseVector encode(const TokenizedSentence& tokens, const EncoderParams& params);

struct EncodeResult {
  DenseVector embedding;
  EncodeCache cache;
};

// Throws EmptySentence for no tokens and Vocabulary for an id >= |V|.
EncodeResult encode_forward(const TokenizedSentence& tokens, const EncoderParams& params);

// Dense gradient buffers shaped like EncoderParams.
struct EncoderGradients {
  EncoderGradients() = default;
  explicit EncoderGradients(const EncoderParams& like)
      : embedding_table(like.embedding_table.rows(), like.embedding_table.cols()),
        projection_weight(like.projection_weight.rows(), like.projection_weight.cols()),
        projection_bias(like.projection_bias.size(), 0.0) {}

  Matrix embedding_table;
  Matrix projection_weight;
  DenseVector projection_bias;

  bool operator==(const EncoderGradients&) const = default;
};

// Gradient for one sentence: only the table rows the sentence touches appear.
struct SentenceGradients {
  std::map<TokenId, DenseVector> table_rows;
  Matrix projection_weight;
  DenseVector projection_bias;
};

// Adds dL/d(params) into `into`, given upstream = dL/dh.
// Throws State when the cache does not belong to params, Shape on a bad upstream.
void encode_backward(const EncodeCache& cache, std::span<const double> upstream,
                     const EncoderParams& params, EncoderGradients& into);

SentenceGradients encode_backward(const EncodeCache& cache, std::span<const double> upstream,
                                  const EncoderParams& params);

// Flat views (table, weight, bias order) for optimizers and gradient checks.
DenseVector flatten(const EncoderParams& params);
void unflatten(std::span<const double> flat, EncoderParams& params);
DenseVector flatten(const EncoderGradients& grads);

}  // namespace rse
