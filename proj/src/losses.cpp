#include "cemb/losses.hpp"

#include <algorithm>
#include <cmath>

#include "cemb/errors.hpp"

namespace cemb {

namespace {

constexpr double kProbFloor = 1e-12;

}  // namespace

void Hyperparams::validate() const {
  if (lambda < 0.0 || lambda > 1.0) throw ParameterError("Hyperparams: lambda must be in [0, 1]");
  if (!(tau > 0.0)) throw ParameterError("Hyperparams: tau must be > 0");
  policy().validate();
}

Tensor one_hot(const std::vector<int>& classes, int n_classes) {
  if (classes.empty()) throw UsageError("one_hot: empty class list");
  Tensor t({static_cast<int>(classes.size()), n_classes}, 0.0);
  for (size_t i = 0; i < classes.size(); ++i) {
    int c = classes[i];
    if (c < 0 || c >= n_classes) throw UsageError("one_hot: class id out of range");
    t.at(static_cast<int>(i), c) = 1.0;
  }
  return t;
}

Var cross_entropy(Graph& g, const Var& probs, const Tensor& onehot_labels) {
  const Tensor& p = probs.value();
  if (p.rank() != 2) throw ShapeError("cross_entropy: probabilities must be [N x C], got " +
                                      p.shape_str());
  if (!p.same_shape(onehot_labels))
    throw ShapeError("cross_entropy: labels shape " + onehot_labels.shape_str() +
                     " does not match probabilities " + p.shape_str());
  int n = p.extent(0), c = p.extent(1);
  if (n < 1) throw UsageError("cross_entropy: empty batch");

  std::vector<int> true_class(static_cast<size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    int ones = 0;
    for (int j = 0; j < c; ++j) {
      double y = onehot_labels.at(i, j);
      if (y != 0.0 && y != 1.0)
        throw UsageError("cross_entropy: labels must be one-hot");
      if (y == 1.0) {
        ++ones;
        true_class[static_cast<size_t>(i)] = j;
      }
      double pr = p.at(i, j);
      if (pr < 0.0 || pr > 1.0 + 1e-9)
        throw UsageError("cross_entropy: probabilities must lie in [0, 1]");
      row_sum += pr;
    }
    if (ones != 1) throw UsageError("cross_entropy: labels must be one-hot");
    if (std::abs(row_sum - 1.0) > 1e-9)
      throw UsageError("cross_entropy: probability row " + std::to_string(i) +
                       " sums to " + std::to_string(row_sum));
  }

  // Sorted accumulation keeps the loss exactly permutation-invariant.
  std::vector<double> terms(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    terms[static_cast<size_t>(i)] =
        -std::log(std::max(p.at(i, true_class[static_cast<size_t>(i)]), kProbFloor));
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;

  int pid = probs.id();
  return g.record(
      Tensor::scalar(total / n), {pid},
      [pid, true_class, n, c](Graph& gg, const Tensor& og) {
        const Tensor& pv = gg.value(pid);
        Tensor t({n, c}, 0.0);
        for (int i = 0; i < n; ++i) {
          int tc = true_class[static_cast<size_t>(i)];
          double pr = pv.at(i, tc);
          if (pr > kProbFloor) t.at(i, tc) = -og(0) / (n * pr);
        }
        gg.accumulate(pid, t);
      },
      "cross_entropy");
}

double cross_entropy(const CEBatch& batch) {
  Graph g;
  return cross_entropy(g, g.constant(batch.probs), batch.labels).value().item();
}

SclGraph supervised_contrastive_graph(Graph& g, const std::vector<Var>& embeddings,
                                      const std::vector<AnchorGroup>& groups, double tau,
                                      bool normalize) {
  if (!(tau > 0.0)) throw ParameterError("supervised_contrastive: tau must be > 0");
  if (groups.empty()) throw UsageError("supervised_contrastive: no anchor groups");
  if (embeddings.empty()) throw UsageError("supervised_contrastive: no embeddings");
  for (const Var& e : embeddings)
    if (e.graph() != &g) throw UsageError("supervised_contrastive: embedding on another graph");
  int s = static_cast<int>(embeddings.size());
  auto check_index = [&](int idx) {
    if (idx < 0 || idx >= s)
      throw UsageError("supervised_contrastive: sentence index " + std::to_string(idx) +
                       " out of range");
  };

  // Normalize lazily so only referenced sentences pay for it.
  std::vector<Var> ready(embeddings.size());
  auto embedding = [&](int idx) -> const Var& {
    check_index(idx);
    Var& slot = ready[static_cast<size_t>(idx)];
    if (!slot) slot = normalize ? l2_normalize(embeddings[static_cast<size_t>(idx)])
                                : embeddings[static_cast<size_t>(idx)];
    return slot;
  };

  SclGraph out;
  for (const AnchorGroup& group : groups) {
    if (group.positives.empty())
      throw UsageError("supervised_contrastive: group with zero positives");
    check_index(group.anchor);
    const Var& anchor = embedding(group.anchor);

    std::vector<Var> pos_scores, all_scores;
    for (int idx : group.positives) {
      Var score = scale(dot(anchor, embedding(idx)), 1.0 / tau);
      pos_scores.push_back(score);
      all_scores.push_back(score);
    }
    for (int idx : group.negatives) all_scores.push_back(scale(dot(anchor, embedding(idx)), 1.0 / tau));

    Var lse = logsumexp(concat(all_scores));
    Var anchor_loss = sub(lse, mean(concat(pos_scores), 0));
    out.per_anchor.push_back(anchor_loss);
  }
  out.mean_loss = out.per_anchor.size() == 1 ? out.per_anchor[0]
                                             : mean(concat(out.per_anchor), 0);
  return out;
}

Var supervised_contrastive(Graph& g, const std::vector<Var>& embeddings,
                           const std::vector<AnchorGroup>& groups, double tau, bool normalize) {
  return supervised_contrastive_graph(g, embeddings, groups, tau, normalize).mean_loss;
}

SclResult supervised_contrastive(const std::vector<Tensor>& embeddings,
                                 const std::vector<AnchorGroup>& groups, double tau,
                                 bool normalize) {
  Graph g;
  std::vector<Var> vars;
  vars.reserve(embeddings.size());
  for (const Tensor& e : embeddings) vars.push_back(g.constant(e));
  SclGraph sg = supervised_contrastive_graph(g, vars, groups, tau, normalize);
  SclResult r;
  r.loss = sg.mean_loss.value().item();
  for (const Var& v : sg.per_anchor) r.per_anchor.push_back(v.value().item());
  return r;
}

Var combined_loss(Graph& g, const Var& ce, const Var& scl, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw ParameterError("combined_loss: lambda must be in [0, 1]");
  if (ce.value().numel() != 1 || scl.value().numel() != 1)
    throw UsageError("combined_loss: both terms must be scalar");
  if (ce.graph() != &g || scl.graph() != &g)
    throw UsageError("combined_loss: terms bound to another graph");
  if (lambda == 0.0) return ce;
  if (lambda == 1.0) return scl;
  return add(scale(ce, 1.0 - lambda), scale(scl, lambda));
}

double combined_loss(double ce, double scl, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw ParameterError("combined_loss: lambda must be in [0, 1]");
  if (lambda == 0.0) return ce;
  if (lambda == 1.0) return scl;
  return (1.0 - lambda) * ce + lambda * scl;
}

}  // namespace cemb
