#include "cemb/encoder.hpp"

#include <cmath>

#include "cemb/errors.hpp"

namespace cemb {

void EncoderConfig::validate() const {
  if (vocab_size < Vocab::kReservedCount)
    throw ParameterError("EncoderConfig: vocab_size must cover the reserved ids");
  if (d_model < 1 || n_layers < 1 || n_heads < 1 || d_ff < 1)
    throw ParameterError("EncoderConfig: dimensions must be positive");
  if (d_model % n_heads != 0)
    throw ParameterError("EncoderConfig: d_model must be divisible by n_heads");
  if (max_seq_len < 2) throw ParameterError("EncoderConfig: max_seq_len must be >= 2");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ParameterError("EncoderConfig: dropout_rate must be in [0, 1)");
}

namespace {

constexpr double kInitStd = 0.02;

Tensor normal_init(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (Eigen::Index i = 0; i < t.numel(); ++i) t(i) = rng.normal(0.0, kInitStd);
  t.set_requires_grad(true);
  return t;
}

Tensor const_init(std::vector<int> shape, double v) {
  Tensor t(std::move(shape), v);
  t.set_requires_grad(true);
  return t;
}

}  // namespace

Model make_model(EncoderConfig config, Vocab vocab, uint64_t seed) {
  config.vocab_size = vocab.size();
  config.validate();
  Rng rng(seed);

  Model m;
  m.config = config;
  m.vocab = std::move(vocab);
  m.encoder.token_embedding = normal_init({config.vocab_size, config.d_model}, rng);
  m.encoder.position_embedding = normal_init({config.max_seq_len, config.d_model}, rng);
  int dh = config.head_dim();
  for (int l = 0; l < config.n_layers; ++l) {
    EncoderLayer layer;
    for (int h = 0; h < config.n_heads; ++h) {
      AttentionHead head;
      head.wq = normal_init({config.d_model, dh}, rng);
      head.bq = const_init({dh}, 0.0);
      head.wk = normal_init({config.d_model, dh}, rng);
      head.bk = const_init({dh}, 0.0);
      head.wv = normal_init({config.d_model, dh}, rng);
      head.bv = const_init({dh}, 0.0);
      layer.heads.push_back(std::move(head));
    }
    layer.wo = normal_init({config.d_model, config.d_model}, rng);
    layer.bo = const_init({config.d_model}, 0.0);
    layer.ln1_gain = const_init({config.d_model}, 1.0);
    layer.ln1_bias = const_init({config.d_model}, 0.0);
    layer.ff_w1 = normal_init({config.d_model, config.d_ff}, rng);
    layer.ff_b1 = const_init({config.d_ff}, 0.0);
    layer.ff_w2 = normal_init({config.d_ff, config.d_model}, rng);
    layer.ff_b2 = const_init({config.d_model}, 0.0);
    layer.ln2_gain = const_init({config.d_model}, 1.0);
    layer.ln2_bias = const_init({config.d_model}, 0.0);
    m.encoder.layers.push_back(std::move(layer));
  }
  int hidden = config.d_model;
  m.head.w1 = normal_init({3 * config.d_model, hidden}, rng);
  m.head.b1 = const_init({hidden}, 0.0);
  m.head.w2 = normal_init({hidden, 3}, rng);
  m.head.b2 = const_init({3}, 0.0);
  return m;
}

// Keep the leaf order in sync with visit_params.
BoundModel bind_model(Graph& g, Model& m, bool requires_grad) {
  BoundModel b;
  auto bind = [&](Tensor& t) {
    Var v = g.leaf(t, requires_grad && t.requires_grad());
    b.slots.emplace_back(&t, v);
    return v;
  };
  b.encoder.token_embedding = bind(m.encoder.token_embedding);
  b.encoder.position_embedding = bind(m.encoder.position_embedding);
  for (auto& layer : m.encoder.layers) {
    BoundLayer bl;
    for (auto& head : layer.heads) {
      BoundHead bh;
      bh.wq = bind(head.wq);
      bh.bq = bind(head.bq);
      bh.wk = bind(head.wk);
      bh.bk = bind(head.bk);
      bh.wv = bind(head.wv);
      bh.bv = bind(head.bv);
      bl.heads.push_back(bh);
    }
    bl.wo = bind(layer.wo);
    bl.bo = bind(layer.bo);
    bl.ln1_gain = bind(layer.ln1_gain);
    bl.ln1_bias = bind(layer.ln1_bias);
    bl.ff_w1 = bind(layer.ff_w1);
    bl.ff_b1 = bind(layer.ff_b1);
    bl.ff_w2 = bind(layer.ff_w2);
    bl.ff_b2 = bind(layer.ff_b2);
    bl.ln2_gain = bind(layer.ln2_gain);
    bl.ln2_bias = bind(layer.ln2_bias);
    b.encoder.layers.push_back(std::move(bl));
  }
  b.head.w1 = bind(m.head.w1);
  b.head.b1 = bind(m.head.b1);
  b.head.w2 = bind(m.head.w2);
  b.head.b2 = bind(m.head.b2);
  return b;
}

Var encode(Graph& g, const std::vector<int>& token_ids, const BoundEncoder& enc,
           const EncoderConfig& config, bool train_mode, Rng* dropout_rng, EncodeTrace* trace) {
  int t = static_cast<int>(token_ids.size());
  if (t < 1) throw UsageError("encode: empty token sequence");
  if (t > config.max_seq_len)
    throw UsageError("encode: sequence length " + std::to_string(t) + " exceeds max_seq_len " +
                     std::to_string(config.max_seq_len) + "; caller must truncate");
  for (int id : token_ids)
    if (id < 0 || id >= config.vocab_size)
      throw UsageError("encode: token id " + std::to_string(id) + " outside vocab");
  if (enc.token_embedding.graph() != &g)
    throw UsageError("encode: parameters are bound to another graph");
  bool use_dropout = train_mode && config.dropout_rate > 0.0;
  if (use_dropout && dropout_rng == nullptr)
    throw UsageError("encode: train-mode dropout needs an rng");

  std::vector<int> positions(static_cast<size_t>(t));
  for (int i = 0; i < t; ++i) positions[static_cast<size_t>(i)] = i;

  Var x = add(gather_rows(enc.token_embedding, token_ids),
              gather_rows(enc.position_embedding, positions));

  double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(config.head_dim()));
  for (const BoundLayer& layer : enc.layers) {
    Var h = layer_norm(x, layer.ln1_gain, layer.ln1_bias);
    std::vector<Var> head_outputs;
    for (const BoundHead& head : layer.heads) {
      Var q = add(matmul(h, head.wq), head.bq);
      Var k = add(matmul(h, head.wk), head.bk);
      Var v = add(matmul(h, head.wv), head.bv);
      Var scores = scale(matmul(q, transpose(k)), inv_sqrt_dh);
      Var attn = softmax(scores, 1.0);
      head_outputs.push_back(matmul(attn, v));
    }
    Var attn_out = add(matmul(concat(head_outputs), layer.wo), layer.bo);
    if (use_dropout) attn_out = dropout(attn_out, config.dropout_rate, *dropout_rng, true);
    x = add(x, attn_out);

    Var f = layer_norm(x, layer.ln2_gain, layer.ln2_bias);
    Var ff = add(matmul(gelu(add(matmul(f, layer.ff_w1), layer.ff_b1)), layer.ff_w2),
                 layer.ff_b2);
    if (use_dropout) ff = dropout(ff, config.dropout_rate, *dropout_rng, true);
    x = add(x, ff);
  }

  std::vector<int> pooled;
  for (int i = 1; i < t; ++i)
    if (token_ids[static_cast<size_t>(i)] != Vocab::kPad) pooled.push_back(i);
  if (pooled.empty()) pooled.push_back(0);  // [START]-only fallback

  if (trace != nullptr) {
    trace->final_hidden = x.value();
    trace->pooled_positions = pooled;
  }
  return mean(gather_rows(x, pooled), 0);
}

Var classify_pair(Graph& g, const Var& u, const Var& v, const BoundClassifier& head) {
  const Tensor& uv = u.value();
  const Tensor& vv = v.value();
  if (uv.rank() != 1 || vv.rank() != 1 || uv.extent(0) != vv.extent(0))
    throw UsageError("classify_pair: embeddings must be rank 1 of equal dimension, got " +
                     uv.shape_str() + " and " + vv.shape_str());
  if (head.w1.value().extent(0) != 3 * uv.extent(0))
    throw UsageError("classify_pair: head expects dimension " +
                     std::to_string(head.w1.value().extent(0) / 3) + ", got " + uv.shape_str());
  if (head.w1.graph() != &g) throw UsageError("classify_pair: head bound to another graph");
  Var features = concat({u, v, abs(sub(u, v))});
  Var hidden = tanh(add(matmul(features, head.w1), head.b1));
  Var logits = add(matmul(hidden, head.w2), head.b2);
  return softmax(logits, 1.0);
}

namespace {

// Read-only binding: leaves copy the parameter values and nothing is ever
// written back through the slots in this mode.
BoundModel bind_eval(Graph& g, const Model& m) {
  return bind_model(g, const_cast<Model&>(m), /*requires_grad=*/false);
}

}  // namespace

Tensor encode_sentence(const Model& m, const std::string& text) {
  Graph g;
  BoundModel b = bind_eval(g, m);
  std::vector<int> ids = tokenize(text, m.vocab, m.config.max_seq_len);
  return encode(g, ids, b.encoder, m.config, /*train_mode=*/false, nullptr).value();
}

std::vector<Tensor> encode_sentences(const Model& m, const std::vector<std::string>& texts) {
  std::vector<Tensor> out;
  out.reserve(texts.size());
  Graph g;
  BoundModel b = bind_eval(g, m);
  for (const std::string& s : texts) {
    std::vector<int> ids = tokenize(s, m.vocab, m.config.max_seq_len);
    out.push_back(encode(g, ids, b.encoder, m.config, /*train_mode=*/false, nullptr).value());
  }
  return out;
}

}  // namespace cemb
