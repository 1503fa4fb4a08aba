#pragma once

#include <string>
#include <vector>

#include "cemb/graph.hpp"
#include "cemb/ops.hpp"
#include "cemb/rng.hpp"
#include "cemb/vocab.hpp"

namespace cemb {

struct EncoderConfig {
  int vocab_size = 0;  // filled in from the vocab
  int d_model = 32;
  int n_layers = 2;
  int n_heads = 2;
  int d_ff = 64;
  int max_seq_len = 16;
  double dropout_rate = 0.0;

  int head_dim() const { return d_model / n_heads; }
  void validate() const;
};

// Per-head projection parameters; heads carry separate matrices so no
// slicing op is needed.
struct AttentionHead {
  Tensor wq, bq, wk, bk, wv, bv;
};

struct EncoderLayer {
  std::vector<AttentionHead> heads;
  Tensor wo, bo;              // output projection after head concat
  Tensor ln1_gain, ln1_bias;  // pre-attention norm
  Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  Tensor ln2_gain, ln2_bias;  // pre-feedforward norm
};

struct EncoderParams {
  Tensor token_embedding;     // [vocab_size x d_model]
  Tensor position_embedding;  // [max_seq_len x d_model]
  std::vector<EncoderLayer> layers;
};

// Two-layer softmax classifier over concat(u, v, |u - v|).
struct ClassifierHead {
  Tensor w1, b1;  // [3*d_model x hidden], [hidden]
  Tensor w2, b2;  // [hidden x 3], [3]
};

struct Model {
  EncoderConfig config;
  Vocab vocab;
  EncoderParams encoder;
  ClassifierHead head;
};

// Zero-mean normal init with std 0.02 for embeddings and weights, zero
// biases, unit layer-norm gains.
Model make_model(EncoderConfig config, Vocab vocab, uint64_t seed);

// Visits every parameter in a fixed order (the checkpoint and optimizer
// order). Keep in sync with bind_model.
template <class ModelT, class F>
void visit_params(ModelT& m, F&& f) {
  f("enc.tok_emb", m.encoder.token_embedding);
  f("enc.pos_emb", m.encoder.position_embedding);
  for (size_t l = 0; l < m.encoder.layers.size(); ++l) {
    auto& layer = m.encoder.layers[l];
    std::string p = "enc.l" + std::to_string(l) + ".";
    for (size_t h = 0; h < layer.heads.size(); ++h) {
      auto& head = layer.heads[h];
      std::string q = p + "h" + std::to_string(h) + ".";
      f(q + "wq", head.wq);
      f(q + "bq", head.bq);
      f(q + "wk", head.wk);
      f(q + "bk", head.bk);
      f(q + "wv", head.wv);
      f(q + "bv", head.bv);
    }
    f(p + "wo", layer.wo);
    f(p + "bo", layer.bo);
    f(p + "ln1_gain", layer.ln1_gain);
    f(p + "ln1_bias", layer.ln1_bias);
    f(p + "ff_w1", layer.ff_w1);
    f(p + "ff_b1", layer.ff_b1);
    f(p + "ff_w2", layer.ff_w2);
    f(p + "ff_b2", layer.ff_b2);
    f(p + "ln2_gain", layer.ln2_gain);
    f(p + "ln2_bias", layer.ln2_bias);
  }
  f("head.w1", m.head.w1);
  f("head.b1", m.head.b1);
  f("head.w2", m.head.w2);
  f("head.b2", m.head.b2);
}

struct BoundHead {
  Var wq, bq, wk, bk, wv, bv;
};
struct BoundLayer {
  std::vector<BoundHead> heads;
  Var wo, bo, ln1_gain, ln1_bias, ff_w1, ff_b1, ff_w2, ff_b2, ln2_gain, ln2_bias;
};
struct BoundEncoder {
  Var token_embedding, position_embedding;
  std::vector<BoundLayer> layers;
};
struct BoundClassifier {
  Var w1, b1, w2, b2;
};

// Model parameters bound as graph leaves, plus the flat (parameter, leaf)
// slots in visit_params order for the optimizer.
struct BoundModel {
  BoundEncoder encoder;
  BoundClassifier head;
  std::vector<std::pair<Tensor*, Var>> slots;
};

BoundModel bind_model(Graph& g, Model& m, bool requires_grad = true);

// Pooling trace for tests: the final hidden states and the positions the
// mean ran over.
struct EncodeTrace {
  Tensor final_hidden;
  std::vector<int> pooled_positions;
};

// Token + learned position embeddings through pre-norm transformer blocks,
// then mean pooling over every position except the START token and PAD.
// A [START]-only sequence pools over the START output instead.
Var encode(Graph& g, const std::vector<int>& token_ids, const BoundEncoder& enc,
           const EncoderConfig& config, bool train_mode, Rng* dropout_rng,
           EncodeTrace* trace = nullptr);

// concat(u, v, |u - v|) -> affine -> tanh -> affine -> softmax.
Var classify_pair(Graph& g, const Var& u, const Var& v, const BoundClassifier& head);

// Forward-only conveniences used by evaluation.
Tensor encode_sentence(const Model& m, const std::string& text);
std::vector<Tensor> encode_sentences(const Model& m, const std::vector<std::string>& texts);

}  // namespace cemb
