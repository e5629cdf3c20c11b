#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pdalign/embedding.hpp"

namespace pdalign {

// Trainable text encoder f: hashed token embeddings, mean pooling, a tanh
// MLP projection, and a final unit normalization. Small enough to train
// on a laptop, shaped like the text tower it stands in for.

struct EncoderConfig {
  std::uint32_t vocab_size = 4096;  // hashed vocabulary
  std::uint32_t token_dim = 32;
  std::uint32_t hidden_dim = 64;
  std::uint32_t out_dim = 16;
  std::uint64_t seed = 0;
};

struct EncoderParams {
  std::uint32_t vocab_size = 0;
  std::uint32_t token_dim = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t out_dim = 0;

  std::vector<double> token_table;  // vocab_size x token_dim
  std::vector<double> w1;           // hidden_dim x token_dim
  std::vector<double> b1;           // hidden_dim
  std::vector<double> w2;           // out_dim x hidden_dim
  std::vector<double> b2;           // out_dim

  static EncoderParams init(const EncoderConfig& config);

  std::size_t parameter_count() const;
  bool same_shape(const EncoderParams& other) const;
  bool finite() const;

  bool operator==(const EncoderParams&) const = default;
};

// Named view over the parameter tensors, in fixed order. Used by the
// optimizer, gradient checking, and ensembling.
struct TensorView {
  const char* name;
  std::vector<double>* data;
};
std::vector<TensorView> tensor_views(EncoderParams& params);

// Lowercase, split on non-alphanumeric bytes, FNV-1a hash into the vocab.
std::vector<std::uint32_t> tokenize_hashed(const std::string& text,
                                           std::uint32_t vocab_size);

// Deterministic unit-norm embedding of text. Throws EncodeError when
// tokenization yields nothing.
Vec encode_text(const EncoderParams& params, const std::string& text);

// Forward pass with enough state kept to backpropagate.
struct EncodeTape {
  std::vector<std::uint32_t> tokens;
  Vec pooled;      // mean of token rows
  Vec hidden;      // tanh activations
  Vec out_raw;     // pre-normalization output
  double out_norm = 0.0;
  Vec out;         // normalized output
};

EncodeTape encode_forward(const EncoderParams& params,
                          std::span<const std::uint32_t> tokens);

// Gradient accumulator with the same shapes as EncoderParams.
struct EncoderGrads {
  std::vector<double> token_table, w1, b1, w2, b2;

  explicit EncoderGrads(const EncoderParams& params);
  void zero();
  void add(const EncoderGrads& other);
};

// Accumulates d(loss)/d(params) for one text given d(loss)/d(output).
void encode_backward(const EncoderParams& params, const EncodeTape& tape,
                     const Vec& grad_out, EncoderGrads& grads);

// Elementwise arithmetic mean of two parameter sets of identical shape.
EncoderParams ensemble_weights(const EncoderParams& a,
                               const EncoderParams& b);

// Checkpoint format "ENCP", version 1, little-endian:
//   magic "ENCP" (4) | version u32 | n_tensors u32
//   per tensor: rank u32 | shape u32 x rank | float64 payload
// Tensors in order: token_table, w1, b1, w2, b2.
std::string serialize_checkpoint(const EncoderParams& params);
EncoderParams parse_checkpoint(std::string_view bytes);
EncoderParams read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const EncoderParams& params,
                      const std::filesystem::path& path);

}  // namespace pdalign
