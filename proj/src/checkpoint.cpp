#include "cemb/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <vector>

#include "cemb/errors.hpp"

namespace cemb {

namespace {

constexpr char kMagic[4] = {'C', 'E', 'M', 'B'};

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("checkpoint: cannot write " + path);
  }
  void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u8(uint8_t v) { bytes(&v, 1); }
  void u32(uint32_t v) {
    uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    bytes(b, 8);
  }
  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  bool ok() const { return static_cast<bool>(out_); }

 private:
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw DataError("checkpoint: cannot read " + path);
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw DataError("checkpoint: truncated file");
  }
  uint8_t u8() {
    uint8_t v;
    bytes(&v, 1);
    return v;
  }
  uint32_t u32() {
    uint8_t b[4];
    bytes(b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    uint8_t b[8];
    bytes(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    if (n > (1u << 24)) throw DataError("checkpoint: implausible string length");
    std::string s(n, '\0');
    if (n) bytes(s.data(), n);
    return s;
  }

 private:
  std::ifstream in_;
};

void write_optional_cap(BinWriter& w, const std::optional<int>& cap) {
  w.i32(cap ? *cap : -1);
}

std::optional<int> read_optional_cap(BinReader& r) {
  int32_t v = r.i32();
  if (v < 0) return std::nullopt;
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  BinWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(ckpt.format_version);

  // vocab
  const auto& tokens = ckpt.model.vocab.tokens();
  w.u32(static_cast<uint32_t>(tokens.size()));
  for (const std::string& t : tokens) w.str(t);

  // encoder config
  const EncoderConfig& ec = ckpt.model.config;
  w.i32(ec.vocab_size);
  w.i32(ec.d_model);
  w.i32(ec.n_layers);
  w.i32(ec.n_heads);
  w.i32(ec.d_ff);
  w.i32(ec.max_seq_len);
  w.f64(ec.dropout_rate);

  // train config
  const TrainConfig& tc = ckpt.train_config;
  w.i32(tc.batch_size);
  w.i32(tc.epochs);
  w.f64(tc.learning_rate);
  w.f64(tc.warmup_fraction);
  w.f64(tc.adam.beta1);
  w.f64(tc.adam.beta2);
  w.f64(tc.adam.eps);
  w.u64(tc.seed);
  w.f64(tc.hyperparams.lambda);
  w.f64(tc.hyperparams.tau);
  write_optional_cap(w, tc.hyperparams.n_pos_cap);
  write_optional_cap(w, tc.hyperparams.n_neg_cap);
  w.u8(tc.hyperparams.normalize_embeddings ? 1 : 0);
  w.u8(static_cast<uint8_t>(tc.mode));
  w.f64(tc.max_grad_norm);

  w.u32(static_cast<uint32_t>(ckpt.step));

  // parameters, in visit order
  uint32_t count = 0;
  visit_params(ckpt.model, [&](const std::string&, const Tensor&) { ++count; });
  w.u32(count);
  visit_params(ckpt.model, [&](const std::string& name, const Tensor& t) {
    w.str(name);
    w.u32(static_cast<uint32_t>(t.rank()));
    for (int e : t.shape()) w.u32(static_cast<uint32_t>(e));
    for (Eigen::Index i = 0; i < t.numel(); ++i) w.f64(t(i));
  });
  if (!w.ok()) throw DataError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  BinReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("checkpoint: " + path + " is not a CEMB checkpoint");
  Checkpoint ckpt;
  ckpt.format_version = r.u32();
  if (ckpt.format_version != Checkpoint::kCheckpointFormatVersion)
    throw DataError("checkpoint: unsupported format version " +
                    std::to_string(ckpt.format_version));

  uint32_t n_tokens = r.u32();
  std::vector<std::string> tokens;
  tokens.reserve(n_tokens);
  for (uint32_t i = 0; i < n_tokens; ++i) tokens.push_back(r.str());
  Vocab vocab = Vocab::from_tokens(std::move(tokens));

  EncoderConfig ec;
  ec.vocab_size = r.i32();
  ec.d_model = r.i32();
  ec.n_layers = r.i32();
  ec.n_heads = r.i32();
  ec.d_ff = r.i32();
  ec.max_seq_len = r.i32();
  ec.dropout_rate = r.f64();

  TrainConfig tc;
  tc.batch_size = r.i32();
  tc.epochs = r.i32();
  tc.learning_rate = r.f64();
  tc.warmup_fraction = r.f64();
  tc.adam.beta1 = r.f64();
  tc.adam.beta2 = r.f64();
  tc.adam.eps = r.f64();
  tc.seed = r.u64();
  tc.hyperparams.lambda = r.f64();
  tc.hyperparams.tau = r.f64();
  tc.hyperparams.n_pos_cap = read_optional_cap(r);
  tc.hyperparams.n_neg_cap = read_optional_cap(r);
  tc.hyperparams.normalize_embeddings = r.u8() != 0;
  tc.mode = static_cast<TrainMode>(r.u8());
  tc.max_grad_norm = r.f64();
  ckpt.train_config = tc;

  ckpt.step = static_cast<int>(r.u32());

  if (ec.vocab_size != vocab.size())
    throw DataError("checkpoint: vocab_size " + std::to_string(ec.vocab_size) +
                    " does not match stored vocab of " + std::to_string(vocab.size()));

  // Build the model skeleton, then fill parameters by name.
  ckpt.model = make_model(ec, std::move(vocab), /*seed=*/0);

  uint32_t count = r.u32();
  std::map<std::string, Tensor*> by_name;
  visit_params(ckpt.model, [&](const std::string& name, Tensor& t) { by_name[name] = &t; });
  if (count != by_name.size())
    throw DataError("checkpoint: parameter count " + std::to_string(count) +
                    " does not match model layout (" + std::to_string(by_name.size()) + ")");
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint: unknown parameter '" + name + "'");
    Tensor& t = *it->second;
    uint32_t rank = r.u32();
    std::vector<int> shape;
    for (uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(r.u32()));
    if (shape != t.shape())
      throw DataError("checkpoint: parameter '" + name + "' has shape " +
                      shape_to_string(shape) + ", expected " + t.shape_str());
    for (Eigen::Index j = 0; j < t.numel(); ++j) t(j) = r.f64();
  }
  return ckpt;
}

}  // namespace cemb
