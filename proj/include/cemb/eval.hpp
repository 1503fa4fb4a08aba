#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cemb/encoder.hpp"

namespace cemb {

struct StsPair {
  std::string subset_name;
  std::string sentence_a;
  std::string sentence_b;
  double gold_score = 0.0;  // in [0, 5]
};

struct ProbeExample {
  std::string text_a;
  std::optional<std::string> text_b;
  int label = 0;
};

struct ProbeTask {
  std::string name;
  std::vector<ProbeExample> examples;
  int n_classes = 2;
};

struct EvalReport {
  std::vector<std::pair<std::string, double>> task_scores;
  double average = 0.0;
};

EvalReport make_report(std::vector<std::pair<std::string, double>> task_scores);

double cosine_similarity(Eigen::Ref<const Eigen::VectorXd> u, Eigen::Ref<const Eigen::VectorXd> v);

// Average (fractional) ranks, 1-based; ties share the mean of their ranks.
std::vector<double> fractional_ranks(const std::vector<double>& x);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Pearson correlation of fractional ranks. UsageError for length mismatch,
// n < 2, or an argument that is constant after ranking.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Subset-size-weighted mean of per-subset Spearman correlations between the
// given similarities and gold scores, scaled by 100.
double weighted_spearman(const std::vector<StsPair>& pairs, const std::vector<double>& sims);

// Cosine similarities of the pair embeddings, then weighted_spearman.
double sts_score_from_embeddings(const std::vector<StsPair>& pairs,
                                 const std::vector<Tensor>& emb_a,
                                 const std::vector<Tensor>& emb_b);

double eval_sts(const std::vector<StsPair>& pairs, const Model& model);

// 10-fold assignment: seeded shuffle, contiguous blocks, sizes differing by
// at most one. Returns the fold id of each example.
std::vector<int> fold_assignment(int n, int folds, uint64_t seed);

// Multinomial logistic regression by full-batch gradient descent with a
// Lipschitz-bound step size; L2 penalty on weights (not the intercept).
// Returns the [D+1 x K] weight matrix, intercept row last.
Eigen::MatrixXd fit_multinomial_logistic(const Eigen::MatrixXd& features,
                                         const std::vector<int>& labels, int n_classes,
                                         double l2 = 1e-3, int max_iter = 5000,
                                         double grad_tol = 1e-6);

// Mean 10-fold cross-validated accuracy of the probe classifier, in
// [0, 100].
double probe_accuracy(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                      int n_classes, uint64_t seed);

double eval_probe(const ProbeTask& task, const Model& model, uint64_t seed);

}  // namespace cemb
