#include "cemb/training.hpp"

#include <cmath>
#include <set>
#include <unordered_map>

#include "cemb/errors.hpp"

namespace cemb {

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "ce") return TrainMode::CE_ONLY;
  if (s == "augment") return TrainMode::AUGMENT;
  if (s == "combined") return TrainMode::COMBINED;
  throw UsageError("unknown train mode '" + s + "' (expected ce|augment|combined)");
}

const char* to_string(TrainMode m) {
  switch (m) {
    case TrainMode::CE_ONLY:
      return "ce";
    case TrainMode::AUGMENT:
      return "augment";
    case TrainMode::COMBINED:
      return "combined";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ParameterError("TrainConfig: batch_size must be >= 1");
  if (epochs < 1) throw ParameterError("TrainConfig: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ParameterError("TrainConfig: learning_rate must be > 0");
  if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
    throw ParameterError("TrainConfig: warmup_fraction must be in [0, 1)");
  if (max_grad_norm < 0.0) throw ParameterError("TrainConfig: max_grad_norm must be >= 0");
  hyperparams.validate();
}

int total_train_steps(size_t corpus_size, int batch_size, int epochs) {
  size_t per_epoch = (corpus_size + static_cast<size_t>(batch_size) - 1) /
                     static_cast<size_t>(batch_size);
  return static_cast<int>(per_epoch) * epochs;
}

TrainState init_training(const std::vector<LabeledPair>& corpus, const TrainConfig& config,
                         EncoderConfig encoder_config) {
  if (corpus.empty()) throw UsageError("init_training: empty corpus");
  config.validate();
  std::vector<std::string> sentences;
  sentences.reserve(corpus.size() * 2);
  for (const LabeledPair& p : corpus) {
    sentences.push_back(p.premise);
    sentences.push_back(p.hypothesis);
  }
  Vocab vocab = Vocab::build(sentences);
  TrainState st{make_model(encoder_config, std::move(vocab), derive_seed(config.seed, kSeedInit, 0)),
                config,
                Adam(config.adam),
                0,
                total_train_steps(corpus.size(), config.batch_size, config.epochs)};
  return st;
}

StepMetrics train_step(TrainState& state, const std::vector<LabeledPair>& batch) {
  if (batch.empty()) throw UsageError("train_step: empty batch");
  const TrainConfig& cfg = state.config;
  const Hyperparams& hp = cfg.hyperparams;
  int step_index = state.step;
  double lr = lr_schedule(step_index + 1, std::max(state.total_steps, step_index + 1),
                          cfg.learning_rate, cfg.warmup_fraction);
  uint64_t group_seed = derive_seed(cfg.seed, kSeedGroups, static_cast<uint64_t>(step_index));
  Rng dropout_rng(derive_seed(cfg.seed, kSeedDropout, static_cast<uint64_t>(step_index)));

  const std::vector<LabeledPair>* pairs = &batch;
  std::vector<LabeledPair> augmented;
  if (cfg.mode == TrainMode::AUGMENT) {
    augmented = expand_augment(batch, cfg.policy(), group_seed);
    if (augmented.empty()) {
      // no anchor in this batch had a positive, so there is nothing to
      // expand; record a no-op step to keep the schedule aligned
      StepMetrics metrics;
      metrics.step = step_index;
      metrics.lr = lr;
      state.step += 1;
      return metrics;
    }
    pairs = &augmented;
  }

  Graph g;
  BoundModel bound = bind_model(g, state.model);

  // Tied weights: every distinct sentence is encoded exactly once and its
  // embedding Var is shared by the CE and SCL branches.
  std::vector<std::string> sentence_table;
  std::unordered_map<std::string, int> sentence_index;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = sentence_index.emplace(s, static_cast<int>(sentence_table.size()));
    if (inserted) sentence_table.push_back(s);
    return it->second;
  };
  for (const LabeledPair& p : *pairs) {
    intern(p.premise);
    intern(p.hypothesis);
  }
  GroupedBatch grouped;
  bool use_scl = cfg.mode == TrainMode::COMBINED;
  if (use_scl) {
    grouped = build_groups(batch, cfg.policy(), group_seed);
    for (const std::string& s : grouped.sentences) intern(s);
  }

  std::vector<Var> embeddings;
  embeddings.reserve(sentence_table.size());
  for (const std::string& s : sentence_table) {
    std::vector<int> ids = tokenize(s, state.model.vocab, state.model.config.max_seq_len);
    embeddings.push_back(encode(g, ids, bound.encoder, state.model.config, /*train_mode=*/true,
                                &dropout_rng));
  }

  StepMetrics metrics;
  metrics.step = step_index;
  metrics.lr = lr;
  metrics.n_pairs = static_cast<int>(pairs->size());
  metrics.n_sentences = static_cast<int>(sentence_table.size());
  metrics.n_param_tensors = static_cast<int>(bound.slots.size());

  std::vector<Var> prob_rows;
  std::vector<int> classes;
  prob_rows.reserve(pairs->size());
  for (const LabeledPair& p : *pairs) {
    const Var& u = embeddings[static_cast<size_t>(sentence_index.at(p.premise))];
    const Var& v = embeddings[static_cast<size_t>(sentence_index.at(p.hypothesis))];
    prob_rows.push_back(classify_pair(g, u, v, bound.head));
    classes.push_back(static_cast<int>(p.label));
  }
  Var ce = cross_entropy(g, stack_rows(prob_rows), one_hot(classes, 3));
  metrics.ce_loss = ce.value().item();

  Var total = ce;
  if (use_scl) {
    Var scl;
    if (grouped.groups.empty()) {
      scl = g.constant(Tensor::scalar(0.0));
    } else {
      std::vector<Var> table_embeddings;
      table_embeddings.reserve(grouped.sentences.size());
      for (const std::string& s : grouped.sentences)
        table_embeddings.push_back(embeddings[static_cast<size_t>(sentence_index.at(s))]);
      scl = supervised_contrastive(g, table_embeddings, grouped.groups, hp.tau,
                                   hp.normalize_embeddings);
      metrics.n_groups = static_cast<int>(grouped.groups.size());
      for (const AnchorGroup& gr : grouped.groups) {
        metrics.n_positives += static_cast<int>(gr.positives.size());
        metrics.n_negatives += static_cast<int>(gr.negatives.size());
      }
    }
    metrics.scl_loss = scl.value().item();
    total = combined_loss(g, ce, scl, hp.lambda);
  }
  metrics.total_loss = total.value().item();
  if (!std::isfinite(metrics.total_loss))
    throw NumericalError("train_step: non-finite loss at step " + std::to_string(step_index) +
                         " (lr " + std::to_string(lr) + ", ce " + std::to_string(metrics.ce_loss) +
                         ", scl " + std::to_string(metrics.scl_loss) + ")");

  try {
    g.backward(total);
  } catch (const NumericalError& e) {
    throw NumericalError("train_step: step " + std::to_string(step_index) + " (lr " +
                         std::to_string(lr) + "): " + e.what());
  }

  std::vector<Tensor*> params;
  std::vector<Tensor> grads;
  params.reserve(bound.slots.size());
  grads.reserve(bound.slots.size());
  for (auto& [tensor, var] : bound.slots) {
    params.push_back(tensor);
    grads.push_back(g.grad_or_zero(var));
  }
  if (cfg.max_grad_norm > 0.0) {
    double sq = 0.0;
    for (const Tensor& t : grads) sq += t.flat().square().sum();
    double norm = std::sqrt(sq);
    if (norm > cfg.max_grad_norm) {
      double factor = cfg.max_grad_norm / norm;
      for (Tensor& t : grads) t.flat() *= factor;
    }
  }
  state.adam.step(params, grads, lr);
  state.step += 1;
  return metrics;
}

TrainResult train(const std::vector<LabeledPair>& corpus, const TrainConfig& config,
                  const EncoderConfig& encoder_config) {
  TrainState st = init_training(corpus, config, encoder_config);
  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(config.seed, kSeedShuffle, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(config.batch_size)) {
      size_t end = std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      std::vector<LabeledPair> batch;
      batch.reserve(end - begin);
      for (size_t i = begin; i < end; ++i) batch.push_back(corpus[order[i]]);
      result.history.push_back(train_step(st, batch));
    }
  }
  result.model = std::move(st.model);
  result.config = config;
  result.steps = st.step;
  return result;
}

}  // namespace cemb
