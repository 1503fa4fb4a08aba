#include "cemb/batching.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "cemb/errors.hpp"
#include "cemb/rng.hpp"

namespace cemb {

Label label_from_string(const std::string& s) {
  if (s == "entailment") return Label::entailment;
  if (s == "neutral") return Label::neutral;
  if (s == "contradiction") return Label::contradiction;
  throw DataError("unknown label '" + s + "'");
}

const char* to_string(Label l) {
  switch (l) {
    case Label::entailment:
      return "entailment";
    case Label::neutral:
      return "neutral";
    case Label::contradiction:
      return "contradiction";
  }
  return "?";
}

void SelectionPolicy::validate() const {
  if ((n_pos_cap && *n_pos_cap < 1) || (n_neg_cap && *n_neg_cap < 1))
    throw ParameterError("SelectionPolicy: finite caps must be >= 1");
}

std::string SelectionPolicy::to_string() const {
  auto part = [](const std::optional<int>& cap) {
    return cap ? std::to_string(*cap) : std::string("all");
  };
  return part(n_pos_cap) + "p" + part(n_neg_cap) + "n";
}

namespace {

// Keeps at most `cap` elements, sampled uniformly without replacement;
// preserves ascending order. No-op when already within the cap.
void apply_cap(std::vector<int>& ids, const std::optional<int>& cap, Rng& rng) {
  if (!cap || static_cast<int>(ids.size()) <= *cap) return;
  std::vector<int> keep = rng.sample_without_replacement(static_cast<int>(ids.size()), *cap);
  std::vector<int> out;
  out.reserve(keep.size());
  for (int k : keep) out.push_back(ids[static_cast<size_t>(k)]);
  ids = std::move(out);
}

}  // namespace

GroupedBatch build_groups(const std::vector<LabeledPair>& batch, const SelectionPolicy& policy,
                          uint64_t seed) {
  if (batch.empty()) throw UsageError("build_groups: empty batch");
  policy.validate();

  GroupedBatch out;
  std::unordered_map<std::string, int> sentence_id;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = sentence_id.emplace(s, static_cast<int>(out.sentences.size()));
    if (inserted) out.sentences.push_back(s);
    return it->second;
  };

  std::vector<int> premise_order;  // distinct premises, first occurrence
  std::set<int> premise_seen;
  for (const LabeledPair& p : batch) {
    int pid = intern(p.premise);
    intern(p.hypothesis);
    if (premise_seen.insert(pid).second) premise_order.push_back(pid);
  }

  Rng rng(seed);
  for (int anchor : premise_order) {
    std::set<int> pos, neg;
    for (const LabeledPair& p : batch) {
      int pid = sentence_id.at(p.premise);
      int hid = sentence_id.at(p.hypothesis);
      if (pid == anchor) {
        if (p.label == Label::entailment) {
          if (hid != anchor) pos.insert(hid);
        } else {
          neg.insert(hid);
        }
      } else {
        neg.insert(hid);  // hypothesis paired with another premise
      }
    }
    // A string cannot be both positive and negative for one anchor, and the
    // anchor is never its own candidate.
    for (int p : pos) neg.erase(p);
    neg.erase(anchor);
    if (pos.empty()) continue;

    AnchorGroup group;
    group.anchor = anchor;
    group.positives.assign(pos.begin(), pos.end());
    group.negatives.assign(neg.begin(), neg.end());
    apply_cap(group.positives, policy.n_pos_cap, rng);
    apply_cap(group.negatives, policy.n_neg_cap, rng);
    out.groups.push_back(std::move(group));
  }
  return out;
}

std::vector<LabeledPair> expand_augment(const std::vector<LabeledPair>& batch,
                                        const SelectionPolicy& policy, uint64_t seed) {
  GroupedBatch grouped = build_groups(batch, policy, seed);

  // Original label of (premise, hypothesis) when the batch contains it.
  std::map<std::pair<std::string, std::string>, Label> pair_label;
  for (const LabeledPair& p : batch) pair_label.emplace(std::make_pair(p.premise, p.hypothesis), p.label);

  std::vector<LabeledPair> out;
  for (const AnchorGroup& g : grouped.groups) {
    const std::string& anchor = grouped.sentences[static_cast<size_t>(g.anchor)];
    for (int pid : g.positives)
      out.push_back({anchor, grouped.sentences[static_cast<size_t>(pid)], Label::entailment});
    for (int nid : g.negatives) {
      const std::string& hyp = grouped.sentences[static_cast<size_t>(nid)];
      auto it = pair_label.find(std::make_pair(anchor, hyp));
      Label l = (it != pair_label.end() && it->second != Label::entailment) ? it->second
                                                                            : Label::neutral;
      out.push_back({anchor, hyp, l});
    }
  }
  return out;
}

}  // namespace cemb
