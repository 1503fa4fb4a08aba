#include "cemb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "cemb/errors.hpp"
#include "cemb/rng.hpp"
#include "cemb/training.hpp"

namespace cemb {

EvalReport make_report(std::vector<std::pair<std::string, double>> task_scores) {
  if (task_scores.empty()) throw UsageError("make_report: no task scores");
  EvalReport r;
  r.task_scores = std::move(task_scores);
  double sum = 0.0;
  for (const auto& [name, score] : r.task_scores) sum += score;
  r.average = sum / static_cast<double>(r.task_scores.size());
  return r;
}

double cosine_similarity(Eigen::Ref<const Eigen::VectorXd> u, Eigen::Ref<const Eigen::VectorXd> v) {
  if (u.size() != v.size())
    throw ShapeError("cosine_similarity: dimension mismatch " + std::to_string(u.size()) +
                     " vs " + std::to_string(v.size()));
  double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0)
    throw DomainError("cosine_similarity: undefined for a zero-norm vector");
  return u.dot(v) / (nu * nv);
}

std::vector<double> fractional_ranks(const std::vector<double>& x) {
  size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw UsageError("pearson: length mismatch");
  size_t n = x.size();
  if (n < 2) throw UsageError("pearson: need at least 2 points");
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UsageError("pearson: constant input");
  return sxy / std::sqrt(sxx * syy);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw UsageError("spearman: length mismatch");
  if (x.size() < 2) throw UsageError("spearman: need at least 2 points");
  return pearson(fractional_ranks(x), fractional_ranks(y));
}

double weighted_spearman(const std::vector<StsPair>& pairs, const std::vector<double>& sims) {
  if (pairs.size() != sims.size())
    throw UsageError("weighted_spearman: similarity count mismatch");
  if (pairs.empty()) throw UsageError("weighted_spearman: no pairs");

  std::map<std::string, std::vector<size_t>> subsets;  // ordered by name
  for (size_t i = 0; i < pairs.size(); ++i) subsets[pairs[i].subset_name].push_back(i);

  double weighted_sum = 0.0;
  size_t total = 0;
  for (const auto& [name, idx] : subsets) {
    if (idx.size() < 2)
      throw UsageError("weighted_spearman: subset '" + name + "' needs at least 2 pairs");
    std::vector<double> s, gold;
    for (size_t i : idx) {
      s.push_back(sims[i]);
      gold.push_back(pairs[i].gold_score);
    }
    double rho;
    try {
      rho = spearman(s, gold);
    } catch (const UsageError& e) {
      throw UsageError("weighted_spearman: subset '" + name + "': " + e.what());
    }
    weighted_sum += static_cast<double>(idx.size()) * rho;
    total += idx.size();
  }
  return 100.0 * weighted_sum / static_cast<double>(total);
}

double sts_score_from_embeddings(const std::vector<StsPair>& pairs,
                                 const std::vector<Tensor>& emb_a,
                                 const std::vector<Tensor>& emb_b) {
  if (emb_a.size() != pairs.size() || emb_b.size() != pairs.size())
    throw UsageError("sts_score_from_embeddings: embedding count mismatch");
  std::vector<double> sims;
  sims.reserve(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i)
    sims.push_back(cosine_similarity(emb_a[i].vec(), emb_b[i].vec()));
  return weighted_spearman(pairs, sims);
}

double eval_sts(const std::vector<StsPair>& pairs, const Model& model) {
  if (pairs.empty()) throw UsageError("eval_sts: no pairs");
  std::vector<std::string> a, b;
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  for (const StsPair& p : pairs) {
    a.push_back(p.sentence_a);
    b.push_back(p.sentence_b);
  }
  return sts_score_from_embeddings(pairs, encode_sentences(model, a), encode_sentences(model, b));
}

std::vector<int> fold_assignment(int n, int folds, uint64_t seed) {
  if (folds < 2) throw UsageError("fold_assignment: need at least 2 folds");
  if (n < folds) throw UsageError("fold_assignment: fewer examples than folds");
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> fold(static_cast<size_t>(n), -1);
  int base = n / folds, extra = n % folds;
  int pos = 0;
  for (int f = 0; f < folds; ++f) {
    int size = base + (f < extra ? 1 : 0);
    for (int i = 0; i < size; ++i) fold[static_cast<size_t>(order[static_cast<size_t>(pos++)])] = f;
  }
  return fold;
}

namespace {

// Portable FNV-1a; std::hash is implementation-defined and would make fold
// assignments differ across standard libraries.
uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::RowVectorXd row = z.row(i);
    double m = row.maxCoeff();
    Eigen::RowVectorXd e = (row.array() - m).exp();
    p.row(i) = e / e.sum();
  }
  return p;
}

}  // namespace

Eigen::MatrixXd fit_multinomial_logistic(const Eigen::MatrixXd& features,
                                         const std::vector<int>& labels, int n_classes,
                                         double l2, int max_iter, double grad_tol) {
  Eigen::Index n = features.rows();
  if (n < 1) throw UsageError("fit_multinomial_logistic: no examples");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw UsageError("fit_multinomial_logistic: label count mismatch");
  if (n_classes < 2) throw UsageError("fit_multinomial_logistic: need at least 2 classes");
  for (int y : labels)
    if (y < 0 || y >= n_classes) throw UsageError("fit_multinomial_logistic: label out of range");

  Eigen::MatrixXd x = with_intercept(features);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, n_classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, labels[static_cast<size_t>(i)]) = 1.0;

  // 0.5 * sigma_max^2(X)/n bounds the softmax Hessian; Frobenius bounds
  // sigma_max. Guarantees monotone descent.
  double lipschitz = 0.5 * x.squaredNorm() / static_cast<double>(n) + l2;
  double step = 1.0 / lipschitz;

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(x.cols(), n_classes);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd p = softmax_rows(x * w);
    Eigen::MatrixXd grad = x.transpose() * (p - onehot) / static_cast<double>(n);
    grad.topRows(x.cols() - 1) += l2 * w.topRows(x.cols() - 1);  // intercept unpenalized
    if (grad.norm() < grad_tol) break;
    w -= step * grad;
  }
  return w;
}

double probe_accuracy(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                      int n_classes, uint64_t seed) {
  constexpr int kFolds = 10;
  Eigen::Index n = features.rows();
  if (n < kFolds) throw UsageError("probe_accuracy: fewer examples than folds");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw UsageError("probe_accuracy: label count mismatch");

  std::vector<int> fold = fold_assignment(static_cast<int>(n), kFolds, seed);
  double acc_sum = 0.0;
  for (int f = 0; f < kFolds; ++f) {
    std::vector<Eigen::Index> train_idx, test_idx;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold[static_cast<size_t>(i)] == f ? test_idx : train_idx).push_back(i);

    Eigen::MatrixXd xtr(static_cast<Eigen::Index>(train_idx.size()), features.cols());
    std::vector<int> ytr(train_idx.size());
    for (size_t i = 0; i < train_idx.size(); ++i) {
      xtr.row(static_cast<Eigen::Index>(i)) = features.row(train_idx[i]);
      ytr[i] = labels[static_cast<size_t>(train_idx[i])];
    }
    Eigen::MatrixXd w = fit_multinomial_logistic(xtr, ytr, n_classes);

    int correct = 0;
    for (Eigen::Index i : test_idx) {
      Eigen::RowVectorXd xi(features.cols() + 1);
      xi.head(features.cols()) = features.row(i);
      xi(features.cols()) = 1.0;
      Eigen::RowVectorXd scores = xi * w;
      Eigen::Index pred = 0;
      scores.maxCoeff(&pred);
      if (static_cast<int>(pred) == labels[static_cast<size_t>(i)]) ++correct;
    }
    acc_sum += static_cast<double>(correct) / static_cast<double>(test_idx.size());
  }
  return 100.0 * acc_sum / kFolds;
}

double eval_probe(const ProbeTask& task, const Model& model, uint64_t seed) {
  if (static_cast<int>(task.examples.size()) < 10)
    throw UsageError("eval_probe: task '" + task.name + "' needs at least 10 examples");
  for (const ProbeExample& e : task.examples)
    if (e.label < 0 || e.label >= task.n_classes)
      throw UsageError("eval_probe: label out of range in task '" + task.name + "'");

  // Embed all distinct sentences once.
  std::vector<std::string> sentences;
  std::map<std::string, size_t> index;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = index.emplace(s, sentences.size());
    if (inserted) sentences.push_back(s);
    return it->second;
  };
  for (const ProbeExample& e : task.examples) {
    intern(e.text_a);
    if (e.text_b) intern(*e.text_b);
  }
  std::vector<Tensor> embs = encode_sentences(model, sentences);

  int d = embs.empty() ? 0 : embs[0].extent(0);
  bool pair_task = task.examples[0].text_b.has_value();
  Eigen::Index feat_dim = pair_task ? 3 * d : d;
  Eigen::MatrixXd features(static_cast<Eigen::Index>(task.examples.size()), feat_dim);
  std::vector<int> labels;
  labels.reserve(task.examples.size());
  for (size_t i = 0; i < task.examples.size(); ++i) {
    const ProbeExample& e = task.examples[i];
    if (e.text_b.has_value() != pair_task)
      throw UsageError("eval_probe: task '" + task.name + "' mixes single and pair examples");
    const Tensor& u = embs[index.at(e.text_a)];
    if (pair_task) {
      const Tensor& v = embs[index.at(*e.text_b)];
      // same feature recipe as the training head: concat(u, v, |u - v|)
      features.row(static_cast<Eigen::Index>(i)).segment(0, d) = u.vec();
      features.row(static_cast<Eigen::Index>(i)).segment(d, d) = v.vec();
      features.row(static_cast<Eigen::Index>(i)).segment(2 * d, d) =
          (u.vec() - v.vec()).cwiseAbs();
    } else {
      features.row(static_cast<Eigen::Index>(i)) = u.vec();
    }
    labels.push_back(e.label);
  }
  return probe_accuracy(features, labels, task.n_classes,
                        derive_seed(seed, kSeedFolds, fnv1a(task.name)));
}

}  // namespace cemb
