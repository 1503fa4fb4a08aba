// Command-line surface: gen-synth | train | eval-sts | eval-transfer | ablate.
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cemb/ablate.hpp"
#include "cemb/checkpoint.hpp"
#include "cemb/data_io.hpp"
#include "cemb/errors.hpp"
#include "cemb/eval.hpp"
#include "cemb/synth.hpp"
#include "cemb/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr uint32_t kManifestVersion = 1;

std::optional<int> parse_cap(const std::string& text, const std::string& flag) {
  if (text == "all") return std::nullopt;
  try {
    size_t used = 0;
    int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw cemb::UsageError(flag + ": expected a positive integer or 'all', got '" + text + "'");
  }
}

bool parse_bool(const std::string& text, const std::string& flag) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw cemb::UsageError(flag + ": expected 'true' or 'false', got '" + text + "'");
}

json cap_json(const std::optional<int>& cap) { return cap ? json(*cap) : json("all"); }

int eval_threads() {
  const char* env = std::getenv("CEMB_THREADS");
  if (env == nullptr) return 1;
  try {
    return std::max(1, std::stoi(env));
  } catch (const std::exception&) {
    throw cemb::UsageError("CEMB_THREADS must be an integer");
  }
}

// Shared train/encoder flag block so `train` and `ablate` stay consistent.
struct TrainFlags {
  std::string data;
  std::string mode = "combined";
  double lambda = 0.5;
  double tau = 1.0;
  std::string n_pos = "all";
  std::string n_neg = "all";
  std::string normalize = "true";
  int batch_size = 64;
  double lr = 2e-5;
  double warmup = 0.1;
  int epochs = 1;
  uint64_t seed = 0;
  double max_grad_norm = 0.0;
  int d_model = 32;
  int n_layers = 2;
  int n_heads = 2;
  int d_ff = 64;
  int max_seq_len = 16;
  double dropout = 0.0;

  void add_to(CLI::App& cmd, bool data_required) {
    auto* d = cmd.add_option("--data", data, "NLI training data (JSONL)");
    if (data_required) d->required();
    cmd.add_option("--mode", mode, "training mode: ce|augment|combined")->capture_default_str();
    cmd.add_option("--lambda", lambda, "contrastive weight in [0,1]")->capture_default_str();
    cmd.add_option("--tau", tau, "softmax temperature")->capture_default_str();
    cmd.add_option("--n-pos", n_pos, "positives cap per anchor: int|all")->capture_default_str();
    cmd.add_option("--n-neg", n_neg, "negatives cap per anchor: int|all")->capture_default_str();
    cmd.add_option("--normalize", normalize, "l2-normalize embeddings in the contrastive loss: true|false")
        ->capture_default_str();
    cmd.add_option("--batch-size", batch_size)->capture_default_str();
    cmd.add_option("--lr", lr, "base learning rate")->capture_default_str();
    cmd.add_option("--warmup", warmup, "warmup fraction of total steps")->capture_default_str();
    cmd.add_option("--epochs", epochs)->capture_default_str();
    cmd.add_option("--seed", seed)->capture_default_str();
    cmd.add_option("--max-grad-norm", max_grad_norm, "gradient clipping norm, 0 disables")
        ->capture_default_str();
    cmd.add_option("--d-model", d_model)->capture_default_str();
    cmd.add_option("--n-layers", n_layers)->capture_default_str();
    cmd.add_option("--n-heads", n_heads)->capture_default_str();
    cmd.add_option("--d-ff", d_ff)->capture_default_str();
    cmd.add_option("--max-seq-len", max_seq_len)->capture_default_str();
    cmd.add_option("--dropout", dropout)->capture_default_str();
  }

  cemb::TrainConfig train_config() const {
    cemb::TrainConfig cfg;
    cfg.mode = cemb::train_mode_from_string(mode);
    cfg.hyperparams.lambda = lambda;
    cfg.hyperparams.tau = tau;
    cfg.hyperparams.n_pos_cap = parse_cap(n_pos, "--n-pos");
    cfg.hyperparams.n_neg_cap = parse_cap(n_neg, "--n-neg");
    cfg.hyperparams.normalize_embeddings = parse_bool(normalize, "--normalize");
    cfg.batch_size = batch_size;
    cfg.learning_rate = lr;
    cfg.warmup_fraction = warmup;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.max_grad_norm = max_grad_norm;
    cfg.validate();
    return cfg;
  }

  cemb::EncoderConfig encoder_config() const {
    cemb::EncoderConfig cfg;
    cfg.d_model = d_model;
    cfg.n_layers = n_layers;
    cfg.n_heads = n_heads;
    cfg.d_ff = d_ff;
    cfg.max_seq_len = max_seq_len;
    cfg.dropout_rate = dropout;
    return cfg;
  }

  json to_json() const {
    json j;
    j["data"] = data;
    j["mode"] = mode;
    j["lambda"] = lambda;
    j["tau"] = tau;
    j["n_pos"] = cap_json(parse_cap(n_pos, "--n-pos"));
    j["n_neg"] = cap_json(parse_cap(n_neg, "--n-neg"));
    j["normalize"] = parse_bool(normalize, "--normalize");
    j["batch_size"] = batch_size;
    j["lr"] = lr;
    j["warmup"] = warmup;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["max_grad_norm"] = max_grad_norm;
    j["d_model"] = d_model;
    j["n_layers"] = n_layers;
    j["n_heads"] = n_heads;
    j["d_ff"] = d_ff;
    j["max_seq_len"] = max_seq_len;
    j["dropout"] = dropout;
    return j;
  }
};

void write_manifest(const std::string& command, const json& config, const json& inputs,
                    const json& outputs, const std::string& path) {
  json j;
  j["tool"] = "cemb";
  j["command"] = command;
  j["manifest_version"] = kManifestVersion;
  j["checkpoint_format_version"] = cemb::Checkpoint::kCheckpointFormatVersion;
  j["config"] = config;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  std::ofstream out(path);
  if (!out) throw cemb::DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

int cmd_gen_synth(const cemb::SynthSpec& spec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  cemb::SynthData data = cemb::gen_synth(spec);
  fs::path dir(out_dir);
  std::string train_path = (dir / "train.jsonl").string();
  std::string sts_path = (dir / "sts.tsv").string();
  std::string probe_path = (dir / "probe_topic.jsonl").string();
  std::string tasks_path = (dir / "tasks.json").string();
  cemb::save_nli(data.train, train_path);
  cemb::save_sts_tsv(data.sts, sts_path);
  cemb::save_probe_jsonl(data.probe, probe_path);
  cemb::save_task_manifest({{data.probe.name, probe_path, data.probe.n_classes}}, tasks_path);

  json config;
  config["topics"] = spec.n_topics;
  config["premises_per_topic"] = spec.premises_per_topic;
  config["hyps_per_premise"] = spec.hypotheses_per_premise;
  config["sts_per_band"] = spec.sts_pairs_per_band;
  config["probe_per_topic"] = spec.probe_examples_per_topic;
  config["seed"] = spec.seed;
  json outputs;
  outputs["train"] = train_path;
  outputs["sts"] = sts_path;
  outputs["probe"] = probe_path;
  outputs["tasks"] = tasks_path;
  write_manifest("gen-synth", config, json::object(), outputs, (dir / "manifest.json").string());

  std::cout << "wrote " << data.train.size() << " training pairs, " << data.sts.size()
            << " sts pairs, " << data.probe.examples.size() << " probe examples to " << out_dir
            << "\n";
  return 0;
}

int cmd_train(const TrainFlags& flags, const std::string& out_path) {
  std::vector<cemb::LabeledPair> corpus = cemb::load_nli(flags.data);
  cemb::TrainConfig cfg = flags.train_config();
  cemb::EncoderConfig ecfg = flags.encoder_config();
  cemb::TrainResult result = cemb::train(corpus, cfg, ecfg);

  int stride = std::max(1, static_cast<int>(result.history.size()) / 10);
  for (size_t i = 0; i < result.history.size(); ++i) {
    const cemb::StepMetrics& m = result.history[i];
    if (static_cast<int>(i) % stride != 0 && i + 1 != result.history.size()) continue;
    std::cout << "step " << m.step << ": ce " << m.ce_loss << ", scl " << m.scl_loss
              << ", total " << m.total_loss << ", lr " << m.lr << ", groups " << m.n_groups
              << "\n";
  }
  std::cout << "trained " << result.steps << " steps on " << corpus.size() << " pairs"
            << " (mode " << cemb::to_string(cfg.mode) << ", policy "
            << cfg.policy().to_string() << ")\n";

  cemb::Checkpoint ckpt{cemb::Checkpoint::kCheckpointFormatVersion, std::move(result.model), cfg,
                        result.steps};
  cemb::save_checkpoint(ckpt, out_path);
  std::string vocab_path = out_path + ".vocab.txt";
  ckpt.model.vocab.save(vocab_path);
  json inputs;
  inputs["data"] = flags.data;
  json outputs;
  outputs["checkpoint"] = out_path;
  outputs["vocab"] = vocab_path;
  write_manifest("train", flags.to_json(), inputs, outputs, out_path + ".manifest.json");
  std::cout << "checkpoint written to " << out_path << "\n";
  return 0;
}

int cmd_eval_sts(const std::string& ckpt_path, const std::vector<std::string>& data_paths,
                 const std::string& report_path) {
  cemb::Checkpoint ckpt = cemb::load_checkpoint(ckpt_path);
  std::vector<std::pair<std::string, double>> scores;
  for (const std::string& path : data_paths) {
    std::vector<cemb::StsPair> pairs = cemb::load_sts_tsv(path);
    scores.emplace_back(fs::path(path).stem().string(), cemb::eval_sts(pairs, ckpt.model));
  }
  cemb::EvalReport report = cemb::make_report(std::move(scores));
  cemb::write_report_json(report, report_path);
  std::string table = format_report_table(report);
  std::ofstream(report_path + ".txt") << table;
  std::cout << table;

  json config;
  config["ckpt"] = ckpt_path;
  config["data"] = data_paths;
  json outputs;
  outputs["report"] = report_path;
  outputs["table"] = report_path + ".txt";
  write_manifest("eval-sts", config, json{{"checkpoint", ckpt_path}}, outputs,
                 report_path + ".manifest.json");
  return 0;
}

int cmd_eval_transfer(const std::string& ckpt_path, const std::string& tasks_path,
                      const std::string& report_path, uint64_t seed) {
  cemb::Checkpoint ckpt = cemb::load_checkpoint(ckpt_path);
  std::vector<cemb::TaskManifestEntry> entries = cemb::load_task_manifest(tasks_path);
  int threads = eval_threads();

  std::vector<cemb::ProbeTask> tasks;
  tasks.reserve(entries.size());
  for (const auto& e : entries) tasks.push_back(cemb::load_probe_task(e.name, e.path, e.n_classes));

  std::vector<double> accs(tasks.size(), 0.0);
  if (threads <= 1) {
    for (size_t i = 0; i < tasks.size(); ++i) accs[i] = cemb::eval_probe(tasks[i], ckpt.model, seed);
  } else {
    std::vector<std::future<double>> futures(tasks.size());
    size_t next = 0;
    while (next < tasks.size()) {
      size_t launched = std::min(static_cast<size_t>(threads), tasks.size() - next);
      for (size_t i = 0; i < launched; ++i)
        futures[next + i] = std::async(std::launch::async, [&, idx = next + i] {
          return cemb::eval_probe(tasks[idx], ckpt.model, seed);
        });
      for (size_t i = 0; i < launched; ++i) accs[next + i] = futures[next + i].get();
      next += launched;
    }
  }
  // deterministic reduction in manifest task order
  std::vector<std::pair<std::string, double>> scores;
  for (size_t i = 0; i < tasks.size(); ++i) scores.emplace_back(tasks[i].name, accs[i]);
  cemb::EvalReport report = cemb::make_report(std::move(scores));
  cemb::write_report_json(report, report_path);
  std::string table = format_report_table(report);
  std::ofstream(report_path + ".txt") << table;
  std::cout << table;

  json config;
  config["ckpt"] = ckpt_path;
  config["tasks"] = tasks_path;
  config["seed"] = seed;
  config["threads"] = threads;
  json outputs;
  outputs["report"] = report_path;
  write_manifest("eval-transfer", config, json{{"checkpoint", ckpt_path}}, outputs,
                 report_path + ".manifest.json");
  return 0;
}

int cmd_ablate(const TrainFlags& flags, const std::string& grid_text,
               const std::vector<std::string>& sts_paths, const std::string& tasks_path,
               const std::string& report_prefix, int parallel, uint64_t eval_seed) {
  std::string grid_json = grid_text;
  if (!grid_text.empty() && grid_text[0] == '@') {
    std::ifstream in(grid_text.substr(1));
    if (!in) throw cemb::DataError("cannot read grid file " + grid_text.substr(1));
    std::stringstream ss;
    ss << in.rdbuf();
    grid_json = ss.str();
  }
  cemb::AblateGrid grid = cemb::AblateGrid::parse(grid_json);

  std::vector<cemb::LabeledPair> corpus = cemb::load_nli(flags.data);
  std::vector<cemb::StsTask> sts_tasks;
  for (const std::string& path : sts_paths)
    sts_tasks.push_back({fs::path(path).stem().string(), cemb::load_sts_tsv(path)});
  std::vector<cemb::ProbeTask> tasks;
  if (!tasks_path.empty()) {
    for (const auto& e : cemb::load_task_manifest(tasks_path))
      tasks.push_back(cemb::load_probe_task(e.name, e.path, e.n_classes));
  }

  cemb::AblateResult result =
      cemb::run_ablate(corpus, sts_tasks, tasks, flags.train_config(), flags.encoder_config(),
                       grid, parallel, eval_seed);

  std::string json_path = report_prefix + ".json";
  std::string txt_path = report_prefix + ".txt";
  cemb::write_ablate_json(result, json_path);
  std::string table = cemb::format_ablate_table(result);
  std::ofstream(txt_path) << table;
  std::cout << table;

  json config = flags.to_json();
  config["grid"] = json::parse(grid_json);
  config["sts_data"] = sts_paths;
  if (!tasks_path.empty()) config["tasks"] = tasks_path;
  config["parallel"] = parallel;
  config["eval_seed"] = eval_seed;
  json outputs;
  outputs["report_json"] = json_path;
  outputs["report_txt"] = txt_path;
  write_manifest("ablate", config, json{{"data", flags.data}}, outputs,
                 report_prefix + ".manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supervised-contrastive sentence embedding training and evaluation"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic NLI corpus with STS and probe data");
  cemb::SynthSpec spec;
  std::string out_dir = "synth";
  gen->add_option("--topics", spec.n_topics)->capture_default_str();
  gen->add_option("--premises-per-topic", spec.premises_per_topic)->capture_default_str();
  gen->add_option("--hyps-per-premise", spec.hypotheses_per_premise)->capture_default_str();
  gen->add_option("--sts-per-band", spec.sts_pairs_per_band)->capture_default_str();
  gen->add_option("--probe-per-topic", spec.probe_examples_per_topic)->capture_default_str();
  gen->add_option("--seed", spec.seed)->capture_default_str();
  gen->add_option("--out-dir", out_dir)->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "train an encoder checkpoint");
  TrainFlags train_flags;
  std::string out_path = "model.cemb";
  train_flags.add_to(*tr, /*data_required=*/true);
  tr->add_option("--out", out_path, "checkpoint output path")->capture_default_str();

  // eval-sts
  auto* es = app.add_subcommand("eval-sts", "score a checkpoint on STS tasks");
  std::string es_ckpt, es_report = "sts_report.json";
  std::vector<std::string> es_data;
  es->add_option("--ckpt", es_ckpt)->required();
  es->add_option("--data", es_data, "one or more task TSV files")->required();
  es->add_option("--report", es_report)->capture_default_str();

  // eval-transfer
  auto* et = app.add_subcommand("eval-transfer", "score a checkpoint on transfer probe tasks");
  std::string et_ckpt, et_tasks, et_report = "transfer_report.json";
  uint64_t et_seed = 0;
  et->add_option("--ckpt", et_ckpt)->required();
  et->add_option("--tasks", et_tasks, "task manifest JSON")->required();
  et->add_option("--report", et_report)->capture_default_str();
  et->add_option("--seed", et_seed, "fold-assignment seed")->capture_default_str();

  // ablate
  auto* ab = app.add_subcommand("ablate", "sweep hyperparameters and tabulate scores");
  TrainFlags ablate_flags;
  std::string grid_text, ab_tasks, ab_report = "ablate";
  std::vector<std::string> ab_sts;
  int ab_parallel = 1;
  uint64_t ab_eval_seed = 0;
  ablate_flags.add_to(*ab, /*data_required=*/true);
  ab->add_option("--grid", grid_text, "JSON grid (or @file) with lambda/tau/n-pos/n-neg arrays")
      ->required();
  ab->add_option("--sts-data", ab_sts, "one or more STS task TSVs to score every run")
      ->required();
  ab->add_option("--tasks", ab_tasks, "optional probe task manifest");
  ab->add_option("--report", ab_report, "output prefix for .json/.txt")->capture_default_str();
  ab->add_option("--parallel", ab_parallel, "concurrent runs (default serial)")
      ->capture_default_str();
  ab->add_option("--eval-seed", ab_eval_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_synth(spec, out_dir);
    if (tr->parsed()) return cmd_train(train_flags, out_path);
    if (es->parsed()) return cmd_eval_sts(es_ckpt, es_data, es_report);
    if (et->parsed()) return cmd_eval_transfer(et_ckpt, et_tasks, et_report, et_seed);
    if (ab->parsed())
      return cmd_ablate(ablate_flags, grid_text, ab_sts, ab_tasks, ab_report, ab_parallel,
                        ab_eval_seed);
    throw cemb::UsageError("no subcommand selected");
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const cemb::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const cemb::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const cemb::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
