#include "rse/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "rse/error.hpp"
#include "rse/kernels.hpp"

namespace rse {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

Vocab Vocab::from_tokens(std::vector<std::string> id_to_token) {
  if (id_to_token.size() < 2 || id_to_token[kPadId] != kPadToken ||
      id_to_token[kUnkId] != kUnkToken) {
    throw Error(ErrorKind::Vocabulary, "vocabulary must start with [PAD], [UNK]");
  }
  Vocab v;
  v.token_to_id_.reserve(id_to_token.size());
  for (std::size_t i = 0; i < id_to_token.size(); ++i) {
    if (!v.token_to_id_.emplace(id_to_token[i], static_cast<TokenId>(i)).second) {
      throw Error(ErrorKind::Vocabulary, "duplicate vocabulary token '" + id_to_token[i] + "'");
    }
  }
  v.id_to_token_ = std::move(id_to_token);
  return v;
}

TokenId Vocab::lookup(std::string_view token) const {
  if (token == kPadToken || token == kUnkToken) return kUnkId;
  const auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> split_tokens(std::string_view sentence) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && is_space(sentence[i])) ++i;
    const std::size_t start = i;
    while (i < sentence.size() && !is_space(sentence[i])) ++i;
    if (i > start) out.push_back(ascii_lower(sentence.substr(start, i - start)));
  }
  return out;
}

Vocab build_vocab(std::span<const std::string> corpus, std::size_t min_count) {
  if (corpus.empty()) throw Error(ErrorKind::EmptyInput, "build_vocab on empty corpus");
  if (min_count == 0) throw Error(ErrorKind::Config, "build_vocab: min_count must be >= 1");

  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& sentence : corpus) {
    for (auto& tok : split_tokens(sentence)) ++counts[std::move(tok)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= min_count && tok != Vocab::kPadToken && tok != Vocab::kUnkToken) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  std::vector<std::string> tokens{std::string(Vocab::kPadToken), std::string(Vocab::kUnkToken)};
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  return Vocab::from_tokens(std::move(tokens));
}

TokenizedSentence tokenize(std::string_view sentence, const Vocab& vocab, std::size_t max_len) {
  if (max_len == 0) throw Error(ErrorKind::Config, "tokenize: max_len must be >= 1");
  const auto toks = split_tokens(sentence);
  if (toks.empty()) throw Error(ErrorKind::EmptySentence, "sentence has no tokens");
  TokenizedSentence out;
  const std::size_t n = std::min(toks.size(), max_len);
  out.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.ids.push_back(vocab.lookup(toks[i]));
  return out;
}

EncoderParams init_encoder(std::size_t vocab_size, std::size_t d_in, std::size_t d,
                           SeededRng& rng) {
  if (vocab_size == 0 || d_in == 0 || d == 0) {
    throw Error(ErrorKind::Config, "init_encoder: all dimensions must be positive");
  }
  EncoderParams p{Matrix(vocab_size, d_in), Matrix(d_in, d), DenseVector(d, 0.0)};
  const double table_bound = std::sqrt(3.0);
  for (double& x : p.embedding_table.flat()) x = rng.uniform(-table_bound, table_bound);
  const double glorot = std::sqrt(6.0 / static_cast<double>(d_in + d));
  for (double& x : p.projection_weight.flat()) x = rng.uniform(-glorot, glorot);
  return p;
}

void validate(const EncoderParams& params) {
  if (params.vocab_size() == 0 || params.d_in() == 0 || params.d() == 0 ||
      params.projection_weight.rows() != params.d_in() ||
      params.projection_weight.cols() != params.d()) {
    throw Error(ErrorKind::Shape, "encoder parameter blocks have inconsistent shapes");
  }
  if (!all_finite(params.embedding_table.flat()) || !all_finite(params.projection_weight.flat()) ||
      !all_finite(params.projection_bias)) {
    throw Error(ErrorKind::Numeric, "encoder parameters contain non-finite entries");
  }
}

namespace {

void forward_into(const TokenizedSentence& tokens, const EncoderParams& params,
                  DenseVector& pooled, DenseVector& pre) {
  if (tokens.ids.empty()) throw Error(ErrorKind::EmptySentence, "encode of empty token sequence");
  pooled.assign(params.d_in(), 0.0);
  const double inv_len = 1.0 / static_cast<double>(tokens.ids.size());
  // Summing in id order makes the pooled vector bit-identical under any
  // permutation of the sentence.
  std::vector<TokenId> ids = tokens.ids;
  std::sort(ids.begin(), ids.end());
  for (TokenId id : ids) {
    if (id >= params.vocab_size()) {
      throw Error(ErrorKind::Vocabulary, "token id " + std::to_string(id) +
                                             " outside vocabulary of size " +
                                             std::to_string(params.vocab_size()));
    }
    kernels::axpy(inv_len, params.embedding_table.row(id), pooled);
  }
  pre = params.projection_bias;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    kernels::axpy(pooled[i], params.projection_weight.row(i), pre);
  }
}

DenseVector activate(const DenseVector& pre) {
  DenseVector out(pre.size());
  std::transform(pre.begin(), pre.end(), out.begin(), [](double z) { return std::tanh(z); });
  return out;
}

// dL/dz and dL/dpooled for one cached sentence.
void local_grads(const EncodeCache& cache, std::span<const double> upstream,
                 const EncoderParams& params, DenseVector& dz, DenseVector& dpooled) {
  if (cache.params != &params || cache.pooled.size() != params.d_in() ||
      cache.output.size() != params.d()) {
    throw Error(ErrorKind::State, "encode cache was produced with different encoder parameters");
  }
  if (upstream.size() != params.d()) {
    throw Error(ErrorKind::Shape, "upstream gradient has dim " + std::to_string(upstream.size()) +
                                      ", expected " + std::to_string(params.d()));
  }
  dz.resize(params.d());
  for (std::size_t k = 0; k < dz.size(); ++k) {
    const double y = cache.output[k];
    dz[k] = upstream[k] * (1.0 - y * y);
  }
  dpooled.resize(params.d_in());
  for (std::size_t i = 0; i < dpooled.size(); ++i) {
    dpooled[i] = kernels::dot(params.projection_weight.row(i), dz);
  }
}

}  // namespace

DenseVector encode(const TokenizedSentence& tokens, const EncoderParams& params) {
  DenseVector pooled, pre;
  forward_into(tokens, params, pooled, pre);
  return activate(pre);
}

EncodeResult encode_forward(const TokenizedSentence& tokens, const EncoderParams& params) {
  EncodeResult r;
  r.cache.params = &params;
  r.cache.ids = tokens.ids;
  forward_into(tokens, params, r.cache.pooled, r.cache.pre_activation);
  r.cache.output = activate(r.cache.pre_activation);
  r.embedding = r.cache.output;
  return r;
}

void encode_backward(const EncodeCache& cache, std::span<const double> upstream,
                     const EncoderParams& params, EncoderGradients& into) {
  DenseVector dz, dpooled;
  local_grads(cache, upstream, params, dz, dpooled);
  if (into.projection_bias.size() != params.d() ||
      into.embedding_table.rows() != params.vocab_size()) {
    throw Error(ErrorKind::Shape, "gradient accumulator does not match encoder shape");
  }
  kernels::axpy(1.0, dz, into.projection_bias);
  for (std::size_t i = 0; i < cache.pooled.size(); ++i) {
    kernels::axpy(cache.pooled[i], dz, into.projection_weight.row(i));
  }
  const double inv_len = 1.0 / static_cast<double>(cache.ids.size());
  for (TokenId id : cache.ids) kernels::axpy(inv_len, dpooled, into.embedding_table.row(id));
}

SentenceGradients encode_backward(const EncodeCache& cache, std::span<const double> upstream,
                                  const EncoderParams& params) {
  DenseVector dz, dpooled;
  local_grads(cache, upstream, params, dz, dpooled);
  SentenceGradients g;
  g.projection_bias = dz;
  g.projection_weight = Matrix(params.d_in(), params.d());
  for (std::size_t i = 0; i < cache.pooled.size(); ++i) {
    kernels::axpy(cache.pooled[i], dz, g.projection_weight.row(i));
  }
  const double inv_len = 1.0 / static_cast<double>(cache.ids.size());
  for (TokenId id : cache.ids) {
    auto [it, fresh] = g.table_rows.try_emplace(id, params.d_in(), 0.0);
    kernels::axpy(inv_len, dpooled, it->second);
  }
  return g;
}

DenseVector flatten(const EncoderParams& params) {
  DenseVector out;
  out.reserve(params.parameter_count());
  const auto t = params.embedding_table.flat();
  const auto w = params.projection_weight.flat();
  out.insert(out.end(), t.begin(), t.end());
  out.insert(out.end(), w.begin(), w.end());
  out.insert(out.end(), params.projection_bias.begin(), params.projection_bias.end());
  return out;
}

void unflatten(std::span<const double> flat, EncoderParams& params) {
  if (flat.size() != params.parameter_count()) {
    throw Error(ErrorKind::Shape, "flat parameter vector has the wrong length");
  }
  auto t = params.embedding_table.flat();
  auto w = params.projection_weight.flat();
  auto it = flat.begin();
  std::copy_n(it, t.size(), t.begin());
  it += static_cast<std::ptrdiff_t>(t.size());
  std::copy_n(it, w.size(), w.begin());
  it += static_cast<std::ptrdiff_t>(w.size());
  std::copy_n(it, params.projection_bias.size(), params.projection_bias.begin());
}

DenseVector flatten(const EncoderGradients& grads) {
  DenseVector out;
  const auto t = grads.embedding_table.flat();
  const auto w = grads.projection_weight.flat();
  out.reserve(t.size() + w.size() + grads.projection_bias.size());
  out.insert(out.end(), t.begin(), t.end());
  out.insert(out.end(), w.begin(), w.end());
  out.insert(out.end(), grads.projection_bias.begin(), grads.projection_bias.end());
  return out;
}

}  // namespace rse
