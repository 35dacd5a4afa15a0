#pragma once

#include <cstddef>
#include <string_view>

#include "rse/encoder.hpp"
#include "rse/relation_model.hpp"

namespace rse {

// Everything needed to embed and score sentences.
struct Model {
  Vocab vocab;
  EncoderParams encoder;
  RelationTable relations;
  std::size_t max_len = kDefaultMaxLen;

  bool operator==(const Model&) const = default;
};

DenseVector embed(const Model& model, std::string_view sentence);

}  // namespace rse
