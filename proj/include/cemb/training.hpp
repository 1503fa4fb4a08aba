#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cemb/batching.hpp"
#include "cemb/encoder.hpp"
#include "cemb/losses.hpp"
#include "cemb/optim.hpp"

namespace cemb {

enum class TrainMode { CE_ONLY, AUGMENT, COMBINED };

TrainMode train_mode_from_string(const std::string& s);
const char* to_string(TrainMode m);

// Seed streams; every random consumer derives its own generator.
enum SeedStream : uint64_t {
  kSeedInit = 1,
  kSeedShuffle = 2,
  kSeedGroups = 3,
  kSeedDropout = 4,
  kSeedFolds = 5,
  kSeedSynth = 6,
};

struct TrainConfig {
  int batch_size = 64;
  int epochs = 1;
  double learning_rate = 2e-5;
  double warmup_fraction = 0.1;
  AdamConfig adam;
  uint64_t seed = 0;
  Hyperparams hyperparams;
  TrainMode mode = TrainMode::COMBINED;
  double max_grad_norm = 0.0;  // 0 disables clipping

  SelectionPolicy policy() const { return hyperparams.policy(); }
  void validate() const;
};

struct StepMetrics {
  int step = 0;
  double lr = 0.0;
  double ce_loss = 0.0;
  double scl_loss = 0.0;
  double total_loss = 0.0;
  int n_pairs = 0;
  int n_sentences = 0;
  int n_groups = 0;
  int n_positives = 0;
  int n_negatives = 0;
  int n_param_tensors = 0;
};

struct TrainState {
  Model model;
  TrainConfig config;
  Adam adam;
  int step = 0;
  int total_steps = 0;
};

// Builds the vocab from the corpus and initializes the model.
TrainState init_training(const std::vector<LabeledPair>& corpus, const TrainConfig& config,
                         EncoderConfig encoder_config);

// One optimization step: encode each distinct sentence once through the
// shared encoder, evaluate the mode's loss, backpropagate, apply Adam with
// the scheduled learning rate.
StepMetrics train_step(TrainState& state, const std::vector<LabeledPair>& batch);

struct TrainResult {
  Model model;
  TrainConfig config;
  int steps = 0;
  std::vector<StepMetrics> history;
};

// Seeded shuffle each epoch, sequential batches, final partial batch kept.
TrainResult train(const std::vector<LabeledPair>& corpus, const TrainConfig& config,
                  const EncoderConfig& encoder_config);

int total_train_steps(size_t corpus_size, int batch_size, int epochs);

}  // namespace cemb
