#include "cemb/ablate.hpp"

#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cemb/errors.hpp"

namespace cemb {

using nlohmann::json;

namespace {

std::optional<int> cap_from_json(const json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() == "all") return std::nullopt;
    throw UsageError("ablate grid: cap must be an integer or \"all\"");
  }
  if (v.is_number_integer()) return v.get<int>();
  throw UsageError("ablate grid: cap must be an integer or \"all\"");
}

std::string cap_to_string(const std::optional<int>& cap) {
  return cap ? std::to_string(*cap) : std::string("all");
}

}  // namespace

AblateGrid AblateGrid::parse(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw UsageError("ablate grid: expected a JSON object");
  AblateGrid grid;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_array()) throw UsageError("ablate grid: '" + key + "' must be an array");
    if (key == "lambda") {
      for (const json& v : value) grid.lambdas.push_back(v.get<double>());
    } else if (key == "tau") {
      for (const json& v : value) grid.taus.push_back(v.get<double>());
    } else if (key == "n-pos" || key == "n_pos") {
      for (const json& v : value) grid.n_pos.push_back(cap_from_json(v));
    } else if (key == "n-neg" || key == "n_neg") {
      for (const json& v : value) grid.n_neg.push_back(cap_from_json(v));
    } else {
      throw UsageError("ablate grid: unknown axis '" + key +
                       "' (expected lambda, tau, n-pos, n-neg)");
    }
  }
  if (grid.run_count() == 0) throw UsageError("ablate grid: no runs");
  return grid;
}

size_t AblateGrid::run_count() const {
  auto dim = [](size_t n) { return n == 0 ? size_t{1} : n; };
  return dim(lambdas.size()) * dim(taus.size()) * dim(n_pos.size()) * dim(n_neg.size());
}

AblateResult run_ablate(const std::vector<LabeledPair>& corpus,
                        const std::vector<StsTask>& sts_tasks,
                        const std::vector<ProbeTask>& probe_tasks, const TrainConfig& base,
                        const EncoderConfig& encoder_config, const AblateGrid& grid, int threads,
                        uint64_t eval_seed) {
  if (corpus.empty()) throw UsageError("run_ablate: empty corpus");
  if (sts_tasks.empty()) throw UsageError("run_ablate: no STS tasks to score against");
  for (const StsTask& t : sts_tasks)
    if (t.pairs.empty()) throw UsageError("run_ablate: STS task '" + t.name + "' is empty");

  std::vector<Hyperparams> combos;
  auto axis = [](auto full, auto base_value) {
    using T = decltype(base_value);
    if (full.empty()) return std::vector<T>{base_value};
    return std::vector<T>(full.begin(), full.end());
  };
  for (double lambda : axis(grid.lambdas, base.hyperparams.lambda))
    for (double tau : axis(grid.taus, base.hyperparams.tau))
      for (const auto& np : axis(grid.n_pos, base.hyperparams.n_pos_cap))
        for (const auto& nn : axis(grid.n_neg, base.hyperparams.n_neg_cap)) {
          Hyperparams hp = base.hyperparams;
          hp.lambda = lambda;
          hp.tau = tau;
          hp.n_pos_cap = np;
          hp.n_neg_cap = nn;
          hp.validate();
          combos.push_back(hp);
        }

  auto run_one = [&](const Hyperparams& hp) {
    TrainConfig cfg = base;
    cfg.hyperparams = hp;
    TrainResult trained = train(corpus, cfg, encoder_config);
    AblateRow row;
    row.hyperparams = hp;
    double sum = 0.0;
    for (const StsTask& task : sts_tasks) {
      double score = eval_sts(task.pairs, trained.model);
      row.sts_scores.push_back(score);
      sum += score;
    }
    row.sts_average = sum / static_cast<double>(sts_tasks.size());
    if (!probe_tasks.empty()) {
      double psum = 0.0;
      for (const ProbeTask& task : probe_tasks) psum += eval_probe(task, trained.model, eval_seed);
      row.transfer_average = psum / static_cast<double>(probe_tasks.size());
    }
    return row;
  };

  AblateResult result;
  for (const StsTask& t : sts_tasks) result.sts_task_names.push_back(t.name);
  result.rows.resize(combos.size());
  if (threads <= 1) {
    for (size_t i = 0; i < combos.size(); ++i) result.rows[i] = run_one(combos[i]);
    return result;
  }
  // Fan out, but collect in grid order so output is independent of timing.
  std::vector<std::future<AblateRow>> futures(combos.size());
  size_t next = 0;
  while (next < combos.size()) {
    size_t launched = std::min(static_cast<size_t>(threads), combos.size() - next);
    for (size_t i = 0; i < launched; ++i)
      futures[next + i] = std::async(std::launch::async, run_one, combos[next + i]);
    for (size_t i = 0; i < launched; ++i) result.rows[next + i] = futures[next + i].get();
    next += launched;
  }
  return result;
}

std::string format_ablate_table(const AblateResult& result) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(8) << "lambda" << std::setw(8) << "tau" << std::setw(8) << "n-pos"
     << std::setw(8) << "n-neg" << std::right;
  size_t width = 32;
  for (const std::string& name : result.sts_task_names) {
    int w = std::max(10, static_cast<int>(name.size()) + 2);
    os << std::setw(w) << name;
    width += static_cast<size_t>(w);
  }
  os << std::setw(10) << "avg";
  width += 10;
  bool transfer = !result.rows.empty() && result.rows.front().transfer_average.has_value();
  if (transfer) {
    os << std::setw(10) << "transfer";
    width += 10;
  }
  os << "\n" << std::string(width, '-') << "\n";
  for (const AblateRow& row : result.rows) {
    os << std::left << std::setw(8) << row.hyperparams.lambda << std::setw(8)
       << row.hyperparams.tau << std::setw(8) << cap_to_string(row.hyperparams.n_pos_cap)
       << std::setw(8) << cap_to_string(row.hyperparams.n_neg_cap) << std::right;
    for (size_t i = 0; i < row.sts_scores.size(); ++i) {
      int w = std::max(10, static_cast<int>(result.sts_task_names[i].size()) + 2);
      os << std::setw(w) << row.sts_scores[i];
    }
    os << std::setw(10) << row.sts_average;
    if (row.transfer_average) os << std::setw(10) << *row.transfer_average;
    os << "\n";
  }
  return os.str();
}

void write_ablate_json(const AblateResult& result, const std::string& path) {
  json rows = json::array();
  for (const AblateRow& row : result.rows) {
    json r;
    r["lambda"] = row.hyperparams.lambda;
    r["tau"] = row.hyperparams.tau;
    r["n_pos"] = row.hyperparams.n_pos_cap ? json(*row.hyperparams.n_pos_cap) : json("all");
    r["n_neg"] = row.hyperparams.n_neg_cap ? json(*row.hyperparams.n_neg_cap) : json("all");
    json tasks = json::object();
    for (size_t i = 0; i < row.sts_scores.size(); ++i)
      tasks[result.sts_task_names[i]] = row.sts_scores[i];
    r["sts"] = tasks;
    r["sts_average"] = row.sts_average;
    if (row.transfer_average) r["transfer_average"] = *row.transfer_average;
    rows.push_back(r);
  }
  json j;
  j["sts_tasks"] = result.sts_task_names;
  j["rows"] = rows;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace cemb
