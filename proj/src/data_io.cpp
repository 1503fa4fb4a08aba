#include "cemb/data_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cemb/errors.hpp"

namespace cemb {

using nlohmann::json;

namespace {

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  return in;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

[[noreturn]] void line_error(const std::string& path, size_t line_no, const std::string& what) {
  throw DataError(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<LabeledPair> load_nli(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::vector<LabeledPair> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) line_error(path, line_no, "malformed JSON");
    if (!j.contains("premise") || !j.contains("hypothesis") || !j.contains("label"))
      line_error(path, line_no, "record needs premise, hypothesis and label");
    if (!j["premise"].is_string() || !j["hypothesis"].is_string() || !j["label"].is_string())
      line_error(path, line_no, "premise, hypothesis and label must be strings");
    LabeledPair p;
    p.premise = j["premise"].get<std::string>();
    p.hypothesis = j["hypothesis"].get<std::string>();
    if (p.premise.empty() || p.hypothesis.empty())
      line_error(path, line_no, "premise and hypothesis must be nonempty");
    try {
      p.label = label_from_string(j["label"].get<std::string>());
    } catch (const DataError& e) {
      line_error(path, line_no, e.what());
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw UsageError(path + ": no NLI records");
  return out;
}

void save_nli(const std::vector<LabeledPair>& pairs, const std::string& path) {
  std::ofstream out = open_for_write(path);
  for (const LabeledPair& p : pairs) {
    json j;
    j["premise"] = p.premise;
    j["hypothesis"] = p.hypothesis;
    j["label"] = to_string(p.label);
    out << j.dump() << "\n";
  }
}

std::vector<StsPair> load_sts_tsv(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::vector<StsPair> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    std::vector<std::string> cols;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 4)
      line_error(path, line_no, "expected 4 tab-separated columns, got " +
                                    std::to_string(cols.size()));
    StsPair p;
    p.subset_name = cols[0];
    p.sentence_a = cols[1];
    p.sentence_b = cols[2];
    try {
      size_t used = 0;
      p.gold_score = std::stod(cols[3], &used);
      if (used != cols[3].size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      line_error(path, line_no, "gold_score '" + cols[3] + "' is not a number");
    }
    if (p.subset_name.empty()) line_error(path, line_no, "empty subset name");
    if (p.gold_score < 0.0 || p.gold_score > 5.0)
      line_error(path, line_no, "gold_score must lie in [0, 5]");
    out.push_back(std::move(p));
  }
  if (out.empty()) throw UsageError(path + ": no STS pairs");
  return out;
}

void save_sts_tsv(const std::vector<StsPair>& pairs, const std::string& path) {
  std::ofstream out = open_for_write(path);
  out << std::setprecision(17);
  for (const StsPair& p : pairs)
    out << p.subset_name << "\t" << p.sentence_a << "\t" << p.sentence_b << "\t" << p.gold_score
        << "\n";
}

ProbeTask load_probe_task(const std::string& name, const std::string& path, int n_classes) {
  if (n_classes < 2) throw DataError("probe task '" + name + "': n_classes must be >= 2");
  std::ifstream in = open_for_read(path);
  ProbeTask task;
  task.name = name;
  task.n_classes = n_classes;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) line_error(path, line_no, "malformed JSON");
    if (!j.contains("label") || !j["label"].is_number_integer())
      line_error(path, line_no, "record needs an integer label");
    ProbeExample e;
    e.label = j["label"].get<int>();
    if (e.label < 0 || e.label >= n_classes)
      line_error(path, line_no, "label " + std::to_string(e.label) + " outside [0, " +
                                    std::to_string(n_classes) + ")");
    if (j.contains("text") && j["text"].is_string()) {
      e.text_a = j["text"].get<std::string>();
    } else if (j.contains("text_a") && j["text_a"].is_string() && j.contains("text_b") &&
               j["text_b"].is_string()) {
      e.text_a = j["text_a"].get<std::string>();
      e.text_b = j["text_b"].get<std::string>();
    } else {
      line_error(path, line_no, "record needs either text or text_a/text_b strings");
    }
    task.examples.push_back(std::move(e));
  }
  if (task.examples.empty()) throw UsageError(path + ": no probe examples");
  return task;
}

void save_probe_jsonl(const ProbeTask& task, const std::string& path) {
  std::ofstream out = open_for_write(path);
  for (const ProbeExample& e : task.examples) {
    json j;
    if (e.text_b) {
      j["text_a"] = e.text_a;
      j["text_b"] = *e.text_b;
    } else {
      j["text"] = e.text_a;
    }
    j["label"] = e.label;
    out << j.dump() << "\n";
  }
}

std::vector<TaskManifestEntry> load_task_manifest(const std::string& path) {
  std::ifstream in = open_for_read(path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object() || !j.contains("tasks") || !j["tasks"].is_array())
    throw DataError(path + ": task manifest must be an object with a tasks array");
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<TaskManifestEntry> out;
  for (const json& t : j["tasks"]) {
    if (!t.contains("name") || !t.contains("path") || !t.contains("n_classes"))
      throw DataError(path + ": each task needs name, path and n_classes");
    TaskManifestEntry e;
    e.name = t["name"].get<std::string>();
    std::filesystem::path p = t["path"].get<std::string>();
    e.path = p.is_absolute() ? p.string() : (base / p).string();
    e.n_classes = t["n_classes"].get<int>();
    out.push_back(std::move(e));
  }
  if (out.empty()) throw DataError(path + ": empty task manifest");
  return out;
}

void save_task_manifest(const std::vector<TaskManifestEntry>& tasks, const std::string& path) {
  json j;
  j["tasks"] = json::array();
  for (const TaskManifestEntry& t : tasks) {
    j["tasks"].push_back({{"name", t.name},
                          {"path", std::filesystem::path(t.path).filename().string()},
                          {"n_classes", t.n_classes}});
  }
  std::ofstream out = open_for_write(path);
  out << j.dump(2) << "\n";
}

void write_report_json(const EvalReport& report, const std::string& path) {
  json tasks = json::object();
  for (const auto& [name, score] : report.task_scores) tasks[name] = score;
  json j;
  j["tasks"] = tasks;
  j["average"] = report.average;
  std::ofstream out = open_for_write(path);
  out << j.dump(2) << "\n";
}

std::string format_report_table(const EvalReport& report) {
  size_t width = std::string("average").size();
  for (const auto& [name, score] : report.task_scores) width = std::max(width, name.size());
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  for (const auto& [name, score] : report.task_scores)
    os << std::left << std::setw(static_cast<int>(width) + 2) << name << std::right
       << std::setw(8) << score << "\n";
  os << std::string(width + 10, '-') << "\n";
  os << std::left << std::setw(static_cast<int>(width) + 2) << "average" << std::right
     << std::setw(8) << report.average << "\n";
  return os.str();
}

}  // namespace cemb
