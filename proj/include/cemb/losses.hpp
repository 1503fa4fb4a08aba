#pragma once

#include <optional>
#include <vector>

#include "cemb/batching.hpp"
#include "cemb/graph.hpp"
#include "cemb/ops.hpp"

namespace cemb {

// Objective hyperparameters: lambda interpolates cross-entropy against the
// supervised contrastive term, tau is the softmax temperature, and the caps
// mirror the selection policy.
struct Hyperparams {
  double lambda = 0.5;
  double tau = 1.0;
  std::optional<int> n_pos_cap;
  std::optional<int> n_neg_cap;
  bool normalize_embeddings = true;

  SelectionPolicy policy() const { return {n_pos_cap, n_neg_cap}; }
  void validate() const;
};

// Row-aligned predicted probabilities and one-hot labels, both [N x C].
struct CEBatch {
  Tensor probs;
  Tensor labels;
};

Tensor one_hot(const std::vector<int>& classes, int n_classes);

// Mean negative log-probability of the true class. Probabilities are
// clamped below at 1e-12 before the log; the per-row terms are summed in
// sorted order, so the result is exactly invariant to row permutations.
Var cross_entropy(Graph& g, const Var& probs, const Tensor& onehot_labels);
double cross_entropy(const CEBatch& batch);

// Per-anchor supervised contrastive losses plus their mean. Embeddings are
// the batch sentence table; each anchor's score vector runs over its
// positives then negatives, divided by tau, reduced with a max-subtracted
// log-sum-exp.
struct SclGraph {
  Var mean_loss;
  std::vector<Var> per_anchor;
};
SclGraph supervised_contrastive_graph(Graph& g, const std::vector<Var>& embeddings,
                                      const std::vector<AnchorGroup>& groups, double tau,
                                      bool normalize);
Var supervised_contrastive(Graph& g, const std::vector<Var>& embeddings,
                           const std::vector<AnchorGroup>& groups, double tau, bool normalize);

struct SclResult {
  double loss = 0.0;
  std::vector<double> per_anchor;
};
SclResult supervised_contrastive(const std::vector<Tensor>& embeddings,
                                 const std::vector<AnchorGroup>& groups, double tau,
                                 bool normalize);

// (1 - lambda) * ce + lambda * scl; the endpoints return the untouched
// operand so lambda = 0 and lambda = 1 are bitwise identities.
Var combined_loss(Graph& g, const Var& ce, const Var& scl, double lambda);
double combined_loss(double ce, double scl, double lambda);

}  // namespace cemb
