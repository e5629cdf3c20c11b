#include "pdalign/encoder.hpp"

#include <cmath>
#include <cstring>

#include "pdalign/errors.hpp"
#include "pdalign/io_util.hpp"
#include "pdalign/rng.hpp"

namespace pdalign {

namespace {

constexpr char kMagic[4] = {'E', 'N', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

void fill_gaussian(std::vector<double>& v, DetRng& rng, double stddev) {
  for (auto& x : v) x = rng.next_gaussian() * stddev;
}

}  // namespace

EncoderParams EncoderParams::init(const EncoderConfig& config) {
  if (config.vocab_size == 0 || config.token_dim == 0 ||
      config.hidden_dim == 0 || config.out_dim == 0) {
    throw ConfigError("encoder dimensions must be nonzero");
  }
  EncoderParams p;
  p.vocab_size = config.vocab_size;
  p.token_dim = config.token_dim;
  p.hidden_dim = config.hidden_dim;
  p.out_dim = config.out_dim;
  p.token_table.resize(std::size_t(p.vocab_size) * p.token_dim);
  p.w1.resize(std::size_t(p.hidden_dim) * p.token_dim);
  p.b1.assign(p.hidden_dim, 0.0);
  p.w2.resize(std::size_t(p.out_dim) * p.hidden_dim);
  p.b2.assign(p.out_dim, 0.0);

  DetRng rng(config.seed);
  fill_gaussian(p.token_table, rng, 1.0 / std::sqrt(double(p.token_dim)));
  fill_gaussian(p.w1, rng, 1.0 / std::sqrt(double(p.token_dim)));
  fill_gaussian(p.w2, rng, 1.0 / std::sqrt(double(p.hidden_dim)));
  return p;
}

std::size_t EncoderParams::parameter_count() const {
  return token_table.size() + w1.size() + b1.size() + w2.size() + b2.size();
}

bool EncoderParams::same_shape(const EncoderParams& other) const {
  return vocab_size == other.vocab_size && token_dim == other.token_dim &&
         hidden_dim == other.hidden_dim && out_dim == other.out_dim;
}

bool EncoderParams::finite() const {
  const auto ok = [](const std::vector<double>& v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  return ok(token_table) && ok(w1) && ok(b1) && ok(w2) && ok(b2);
}

std::vector<TensorView> tensor_views(EncoderParams& p) {
  return {{"token_table", &p.token_table},
          {"w1", &p.w1},
          {"b1", &p.b1},
          {"w2", &p.w2},
          {"b2", &p.b2}};
}

std::vector<std::uint32_t> tokenize_hashed(const std::string& text,
                                           std::uint32_t vocab_size) {
  constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
  constexpr std::uint64_t kFnvPrime = 1099511628211ull;
  constexpr std::uint64_t kPosSalt = 0x9e3779b97f4a7c15ull;
  std::vector<std::uint32_t> tokens;
  std::uint64_t h = kFnvOffset;
  bool in_token = false;
  // The hash is salted with the token position. Mean pooling alone cannot
  // tell "A ... B" from "B ... A" (identical token multisets), and the
  // whole point of difference texts is that direction matters.
  const auto flush = [&] {
    h = (h ^ (kPosSalt * (tokens.size() + 1))) * kFnvPrime;
    tokens.push_back(static_cast<std::uint32_t>(h % vocab_size));
    in_token = false;
  };
  for (unsigned char c : text) {
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    const bool alnum = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    if (alnum) {
      if (!in_token) {
        h = kFnvOffset;
        in_token = true;
      }
      h = (h ^ c) * kFnvPrime;
    } else if (in_token) {
      flush();
    }
  }
  if (in_token) flush();
  return tokens;
}

EncodeTape encode_forward(const EncoderParams& p,
                          std::span<const std::uint32_t> tokens) {
  if (tokens.empty()) throw EncodeError("no tokens to encode");
  EncodeTape tape;
  tape.tokens.assign(tokens.begin(), tokens.end());

  tape.pooled.assign(p.token_dim, 0.0);
  for (std::uint32_t t : tokens) {
    const double* row = p.token_table.data() + std::size_t(t) * p.token_dim;
    for (std::uint32_t d = 0; d < p.token_dim; ++d) tape.pooled[d] += row[d];
  }
  const double inv_m = 1.0 / double(tokens.size());
  for (auto& x : tape.pooled) x *= inv_m;

  tape.hidden.assign(p.hidden_dim, 0.0);
  for (std::uint32_t h = 0; h < p.hidden_dim; ++h) {
    const double* row = p.w1.data() + std::size_t(h) * p.token_dim;
    double acc = p.b1[h];
    for (std::uint32_t d = 0; d < p.token_dim; ++d) {
      acc += row[d] * tape.pooled[d];
    }
    tape.hidden[h] = std::tanh(acc);
  }

  tape.out_raw.assign(p.out_dim, 0.0);
  for (std::uint32_t o = 0; o < p.out_dim; ++o) {
    const double* row = p.w2.data() + std::size_t(o) * p.hidden_dim;
    double acc = p.b2[o];
    for (std::uint32_t h = 0; h < p.hidden_dim; ++h) {
      acc += row[h] * tape.hidden[h];
    }
    tape.out_raw[o] = acc;
  }

  tape.out_norm = l2_norm(tape.out_raw);
  if (tape.out_norm == 0.0 || !std::isfinite(tape.out_norm)) {
    throw NormalizationError("encoder produced a degenerate output vector");
  }
  tape.out.resize(p.out_dim);
  for (std::uint32_t o = 0; o < p.out_dim; ++o) {
    tape.out[o] = tape.out_raw[o] / tape.out_norm;
  }
  return tape;
}

Vec encode_text(const EncoderParams& params, const std::string& text) {
  const auto tokens = tokenize_hashed(text, params.vocab_size);
  if (tokens.empty()) {
    throw EncodeError("text has no tokens after tokenization");
  }
  return encode_forward(params, tokens).out;
}

EncoderGrads::EncoderGrads(const EncoderParams& p)
    : token_table(p.token_table.size(), 0.0),
      w1(p.w1.size(), 0.0),
      b1(p.b1.size(), 0.0),
      w2(p.w2.size(), 0.0),
      b2(p.b2.size(), 0.0) {}

void EncoderGrads::zero() {
  std::fill(token_table.begin(), token_table.end(), 0.0);
  std::fill(w1.begin(), w1.end(), 0.0);
  std::fill(b1.begin(), b1.end(), 0.0);
  std::fill(w2.begin(), w2.end(), 0.0);
  std::fill(b2.begin(), b2.end(), 0.0);
}

void EncoderGrads::add(const EncoderGrads& other) {
  const auto axpy = [](std::vector<double>& dst,
                       const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  };
  axpy(token_table, other.token_table);
  axpy(w1, other.w1);
  axpy(b1, other.b1);
  axpy(w2, other.w2);
  axpy(b2, other.b2);
}

void encode_backward(const EncoderParams& p, const EncodeTape& tape,
                     const Vec& grad_out, EncoderGrads& grads) {
  if (grad_out.size() != p.out_dim) {
    throw DimError("grad_out dimension mismatch");
  }
  // y = z / |z|  =>  dz = (g - y (y.g)) / |z|
  const double yg = dot(tape.out, grad_out);
  Vec dz(p.out_dim);
  for (std::uint32_t o = 0; o < p.out_dim; ++o) {
    dz[o] = (grad_out[o] - tape.out[o] * yg) / tape.out_norm;
  }

  Vec dh(p.hidden_dim, 0.0);
  for (std::uint32_t o = 0; o < p.out_dim; ++o) {
    const double* row = p.w2.data() + std::size_t(o) * p.hidden_dim;
    double* grow = grads.w2.data() + std::size_t(o) * p.hidden_dim;
    for (std::uint32_t h = 0; h < p.hidden_dim; ++h) {
      grow[h] += dz[o] * tape.hidden[h];
      dh[h] += row[h] * dz[o];
    }
    grads.b2[o] += dz[o];
  }

  Vec dpool(p.token_dim, 0.0);
  for (std::uint32_t h = 0; h < p.hidden_dim; ++h) {
    const double dpre = dh[h] * (1.0 - tape.hidden[h] * tape.hidden[h]);
    const double* row = p.w1.data() + std::size_t(h) * p.token_dim;
    double* grow = grads.w1.data() + std::size_t(h) * p.token_dim;
    for (std::uint32_t d = 0; d < p.token_dim; ++d) {
      grow[d] += dpre * tape.pooled[d];
      dpool[d] += row[d] * dpre;
    }
    grads.b1[h] += dpre;
  }

  const double inv_m = 1.0 / double(tape.tokens.size());
  for (std::uint32_t t : tape.tokens) {
    double* grow = grads.token_table.data() + std::size_t(t) * p.token_dim;
    for (std::uint32_t d = 0; d < p.token_dim; ++d) {
      grow[d] += dpool[d] * inv_m;
    }
  }
}

EncoderParams ensemble_weights(const EncoderParams& a,
                               const EncoderParams& b) {
  if (!a.same_shape(b)) {
    throw DimError("cannot ensemble encoders of different shapes");
  }
  EncoderParams out = a;
  auto views_out = tensor_views(out);
  EncoderParams b_copy = b;  // tensor_views needs mutable access
  auto views_b = tensor_views(b_copy);
  for (std::size_t t = 0; t < views_out.size(); ++t) {
    auto& dst = *views_out[t].data;
    const auto& src = *views_b[t].data;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = 0.5 * (dst[i] + src[i]);
    }
  }
  return out;
}

std::string serialize_checkpoint(const EncoderParams& p) {
  std::string out;
  out.append(kMagic, 4);
  put_u32_le(out, kVersion);
  put_u32_le(out, 5);

  const auto tensor2 = [&](const std::vector<double>& data, std::uint32_t r,
                           std::uint32_t c) {
    put_u32_le(out, 2);
    put_u32_le(out, r);
    put_u32_le(out, c);
    for (double v : data) put_f64_le(out, v);
  };
  const auto tensor1 = [&](const std::vector<double>& data, std::uint32_t n) {
    put_u32_le(out, 1);
    put_u32_le(out, n);
    for (double v : data) put_f64_le(out, v);
  };
  tensor2(p.token_table, p.vocab_size, p.token_dim);
  tensor2(p.w1, p.hidden_dim, p.token_dim);
  tensor1(p.b1, p.hidden_dim);
  tensor2(p.w2, p.out_dim, p.hidden_dim);
  tensor1(p.b2, p.out_dim);
  return out;
}

EncoderParams parse_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  const std::string magic = r.take_bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic: expected ENCP");
  }
  if (r.take_u32_le() != kVersion) throw FormatError("unsupported version");
  if (r.take_u32_le() != 5) throw FormatError("expected 5 tensors");

  struct Tensor {
    std::vector<std::uint32_t> shape;
    std::vector<double> data;
  };
  std::vector<Tensor> tensors;
  for (int t = 0; t < 5; ++t) {
    Tensor tensor;
    const std::uint32_t rank = r.take_u32_le();
    if (rank == 0 || rank > 2) throw FormatError("bad tensor rank");
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint32_t s = r.take_u32_le();
      if (s == 0) throw FormatError("zero tensor dimension");
      tensor.shape.push_back(s);
      total *= s;
    }
    if (r.remaining() < total * 8) {
      throw FormatError("truncated tensor payload");
    }
    tensor.data.reserve(total);
    for (std::uint64_t i = 0; i < total; ++i) {
      tensor.data.push_back(r.take_f64_le());
    }
    tensors.push_back(std::move(tensor));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after tensors");

  if (tensors[0].shape.size() != 2 || tensors[1].shape.size() != 2 ||
      tensors[2].shape.size() != 1 || tensors[3].shape.size() != 2 ||
      tensors[4].shape.size() != 1) {
    throw FormatError("unexpected tensor ranks");
  }
  EncoderParams p;
  p.vocab_size = tensors[0].shape[0];
  p.token_dim = tensors[0].shape[1];
  p.hidden_dim = tensors[1].shape[0];
  p.out_dim = tensors[3].shape[0];
  if (tensors[1].shape[1] != p.token_dim || tensors[2].shape[0] != p.hidden_dim ||
      tensors[3].shape[1] != p.hidden_dim || tensors[4].shape[0] != p.out_dim) {
    throw FormatError("inconsistent tensor shapes");
  }
  p.token_table = std::move(tensors[0].data);
  p.w1 = std::move(tensors[1].data);
  p.b1 = std::move(tensors[2].data);
  p.w2 = std::move(tensors[3].data);
  p.b2 = std::move(tensors[4].data);
  return p;
}

EncoderParams read_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

void write_checkpoint(const EncoderParams& params,
                      const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(params));
}

}  // namespace pdalign
