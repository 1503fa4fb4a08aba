#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cemb {

enum class Label { entailment = 0, neutral = 1, contradiction = 2 };

Label label_from_string(const std::string& s);  // DataError on unknown label
const char* to_string(Label l);

struct LabeledPair {
  std::string premise;
  std::string hypothesis;
  Label label = Label::entailment;
};

// One anchor with its positive and negative sentence indices into the
// batch sentence table. Groups without positives are never emitted.
struct AnchorGroup {
  int anchor = -1;
  std::vector<int> positives;
  std::vector<int> negatives;
};

// Caps on positives/negatives per anchor; nullopt selects all candidates.
// 3p3n = {3, 3}, 3palln = {3, nullopt}, allpalln = {nullopt, nullopt}.
struct SelectionPolicy {
  std::optional<int> n_pos_cap;
  std::optional<int> n_neg_cap;

  static SelectionPolicy all() { return {}; }
  void validate() const;
  std::string to_string() const;
};

struct GroupedBatch {
  std::vector<std::string> sentences;  // deduplicated, first-occurrence order
  std::vector<AnchorGroup> groups;
};

// Builds one group per distinct premise: positives are its entailment
// hypotheses in the batch; negative candidates are its neutral and
// contradiction hypotheses plus every hypothesis paired with another
// premise, minus anything already positive for (or equal to) the anchor.
// Finite caps subsample candidates uniformly without replacement.
GroupedBatch build_groups(const std::vector<LabeledPair>& batch, const SelectionPolicy& policy,
                          uint64_t seed);

// Flattens groups back into labeled pairs for the cross-entropy-only
// augmentation baseline: (anchor, positive) pairs are entailment;
// (anchor, negative) pairs keep their original label when the batch paired
// them with this anchor and are neutral otherwise.
std::vector<LabeledPair> expand_augment(const std::vector<LabeledPair>& batch,
                                        const SelectionPolicy& policy, uint64_t seed);

}  // namespace cemb
