#pragma once

#include <string>

#include "dsner/corpus.hpp"
#include "dsner/encoder.hpp"

namespace dsner {

// Everything needed to run inference: architecture, vocabulary, label
// space and weights.
struct Model {
  EncoderConfig config;
  Vocabulary vocab;
  EntityTypeSet types;
  ParameterStore params;
};

// Little-endian binary checkpoint:
//   "DSNER1" | u32 version
//   | u32 n, n x (str key, str value)        encoder config
//   | u32 n, n x str                         vocabulary in id order
//   | u32 n, n x str                         entity types (O excluded)
//   | u32 n, n x (str name, u32 rows, u32 cols, rows*cols x f64)
// where str is u32 byte length followed by UTF-8 bytes.
void save_checkpoint(const std::string& path, const Model& model);

// Throws ArtifactMismatch on a missing, truncated or malformed file.
Model load_checkpoint(const std::string& path);

}  // namespace dsner
