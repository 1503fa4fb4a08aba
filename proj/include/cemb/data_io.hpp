#pragma once

#include <string>
#include <vector>

#include "cemb/batching.hpp"
#include "cemb/eval.hpp"
#include "cemb/synth.hpp"

namespace cemb {

// NLI data is JSONL with fields premise, hypothesis, label.
std::vector<LabeledPair> load_nli(const std::string& path);
void save_nli(const std::vector<LabeledPair>& pairs, const std::string& path);

// STS data is TSV: subset_name, sentence_a, sentence_b, gold_score.
std::vector<StsPair> load_sts_tsv(const std::string& path);
void save_sts_tsv(const std::vector<StsPair>& pairs, const std::string& path);

// Probe data is JSONL with {"text": ...} or {"text_a": ..., "text_b": ...}
// plus {"label": int}; the sidecar manifest names tasks and class counts.
ProbeTask load_probe_task(const std::string& name, const std::string& path, int n_classes);
void save_probe_jsonl(const ProbeTask& task, const std::string& path);

struct TaskManifestEntry {
  std::string name;
  std::string path;  // relative paths resolve against the manifest directory
  int n_classes = 2;
};

std::vector<TaskManifestEntry> load_task_manifest(const std::string& path);
void save_task_manifest(const std::vector<TaskManifestEntry>& tasks, const std::string& path);

void write_report_json(const EvalReport& report, const std::string& path);
std::string format_report_table(const EvalReport& report);

}  // namespace cemb
