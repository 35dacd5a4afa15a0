#include "rse/model.hpp"

namespace rse {

DenseVector embed(const Model& model, std::string_view sentence) {
  return encode(tokenize(sentence, model.vocab, model.max_len), model.encoder);
}

}  // namespace rse
