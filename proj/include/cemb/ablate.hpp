#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cemb/data_io.hpp"
#include "cemb/training.hpp"

namespace cemb {

// Hyperparameter grid for the ablation sweep. Empty axes keep the base
// config's value; non-empty axes cross-multiply in declaration order
// (lambda, tau, n_pos, n_neg).
struct AblateGrid {
  std::vector<double> lambdas;
  std::vector<double> taus;
  std::vector<std::optional<int>> n_pos;
  std::vector<std::optional<int>> n_neg;

  static AblateGrid parse(const std::string& json_text);  // keys lambda, tau, n-pos, n-neg
  size_t run_count() const;
};

struct StsTask {
  std::string name;
  std::vector<StsPair> pairs;
};

struct AblateRow {
  Hyperparams hyperparams;
  std::vector<double> sts_scores;  // aligned with the task list
  double sts_average = 0.0;
  std::optional<double> transfer_average;
};

struct AblateResult {
  std::vector<std::string> sts_task_names;
  std::vector<AblateRow> rows;
};

// Runs train + eval for every grid point. Each run reuses the base config
// (same seed) with only the swept hyperparameters replaced, so a row is
// identical to running the train and eval commands by hand. `threads <= 1`
// runs serially; rows always come back in grid order.
AblateResult run_ablate(const std::vector<LabeledPair>& corpus,
                        const std::vector<StsTask>& sts_tasks,
                        const std::vector<ProbeTask>& probe_tasks, const TrainConfig& base,
                        const EncoderConfig& encoder_config, const AblateGrid& grid,
                        int threads = 1, uint64_t eval_seed = 0);

std::string format_ablate_table(const AblateResult& result);
void write_ablate_json(const AblateResult& result, const std::string& path);

}  // namespace cemb
