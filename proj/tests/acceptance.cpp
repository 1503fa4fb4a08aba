// Acceptance suite: every criterion prints one PASS/FAIL line with its
// measured quantity and runtime; the process exits nonzero if any fail.
// `acceptance --only N` runs a single criterion.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "cemb/checkpoint.hpp"
#include "cemb/data_io.hpp"
#include "cemb/eval.hpp"
#include "cemb/synth.hpp"
#include "cemb/training.hpp"
#include "model_check.hpp"
#include "test_util.hpp"

using namespace cemb;
using Clock = std::chrono::steady_clock;

namespace {

struct Harness {
  int only = 0;
  int failures = 0;

  void run(int num, const std::string& name, const std::function<bool(std::string&)>& body) {
    if (only != 0 && only != num) return;
    auto start = Clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::ostringstream line;
    line << (ok ? "PASS" : "FAIL") << "  criterion " << num << ": " << name << "  [" << std::fixed
         << std::setprecision(2) << secs << "s]";
    if (!detail.empty()) line << "  (" << detail << ")";
    std::cout << line.str() << std::endl;
    if (!ok) ++failures;
  }
};

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cemb_acceptance_" + name)).string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// --- shared toy fixtures ---------------------------------------------------

EncoderConfig toy_encoder() {
  EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.max_seq_len = 10;
  cfg.dropout_rate = 0.0;
  return cfg;
}

EncoderConfig synth_encoder() {
  EncoderConfig cfg;
  cfg.d_model = 32;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_ff = 64;
  cfg.max_seq_len = 16;
  cfg.dropout_rate = 0.0;
  return cfg;
}

struct SclCase {
  std::vector<Tensor> embeddings;
  std::vector<Eigen::VectorXd> raw;
  std::vector<AnchorGroup> groups;
};

SclCase random_scl_case(Rng& rng) {
  SclCase s;
  int n_sentences = 3 + static_cast<int>(rng.below(6));  // 3..8
  int dim = 2 + static_cast<int>(rng.below(7));          // 2..8
  for (int i = 0; i < n_sentences; ++i) {
    Tensor t = testutil::random_tensor_away_from_zero({dim}, rng, 0.2, 1.0);
    s.raw.push_back(t.vec());
    s.embeddings.push_back(std::move(t));
  }
  int n_groups = 1 + static_cast<int>(rng.below(3));
  for (int k = 0; k < n_groups; ++k) {
    std::vector<int> ids(static_cast<size_t>(n_sentences));
    for (int i = 0; i < n_sentences; ++i) ids[static_cast<size_t>(i)] = i;
    rng.shuffle(ids);
    AnchorGroup g;
    g.anchor = ids[0];
    int n_pos = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(n_sentences - 1)));
    int n_neg = static_cast<int>(rng.below(static_cast<uint64_t>(n_sentences - n_pos)));
    for (int i = 0; i < n_pos; ++i) g.positives.push_back(ids[static_cast<size_t>(1 + i)]);
    for (int i = 0; i < n_neg; ++i) g.negatives.push_back(ids[static_cast<size_t>(1 + n_pos + i)]);
    s.groups.push_back(std::move(g));
  }
  return s;
}

std::vector<LabeledPair> toy_batch() {
  return {
      {"the dog runs fast", "a dog runs", Label::entailment},
      {"the dog runs fast", "the dog sleeps all day", Label::contradiction},
      {"a cat sits near the door", "a cat sits", Label::entailment},
  };
}

std::vector<LabeledPair> random_pair_batch(Rng& rng) {
  static const char* premises[] = {"p one", "p two", "p three", "p four"};
  static const char* hypotheses[] = {"h one", "h two", "h three", "h four",
                                     "h five", "p one", "p two"};
  int n = 1 + static_cast<int>(rng.below(8));
  std::vector<LabeledPair> batch;
  for (int i = 0; i < n; ++i)
    batch.push_back({premises[rng.below(4)], hypotheses[rng.below(7)],
                     static_cast<Label>(rng.below(3))});
  return batch;
}

// one training + STS evaluation of the synthetic experiment
double synth_sts_score(const SynthData& data, TrainMode mode, double lambda, uint64_t seed) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.hyperparams.lambda = lambda;
  cfg.hyperparams.tau = 1.0;
  cfg.hyperparams.normalize_embeddings = true;
  cfg.batch_size = 64;
  cfg.epochs = 3;
  cfg.learning_rate = 1e-3;
  cfg.warmup_fraction = 0.1;
  cfg.seed = seed;
  TrainResult result = train(data.train, cfg, synth_encoder());
  return eval_sts(data.sts, result.model);
}

}  // namespace

int main(int argc, char** argv) {
  Harness h;
  for (int i = 1; i < argc - 1; ++i)
    if (std::strcmp(argv[i], "--only") == 0) h.only = std::atoi(argv[i + 1]);

  h.run(1, "contrastive loss matches the nested-loop oracle (1e-9 rel, <5s)", [](std::string& d) {
    Rng rng(1001);
    const double taus[] = {0.1, 0.5, 1.0};
    double worst = 0.0;
    int configs = 0;
    bool ok = true;
    auto start = Clock::now();
    while (configs < 200) {
      SclCase s = random_scl_case(rng);
      double tau = taus[configs % 3];
      bool normalize = configs % 2 == 0;
      SclResult got = supervised_contrastive(s.embeddings, s.groups, tau, normalize);
      double oracle = testutil::scl_bruteforce(s.raw, s.groups, tau, normalize);
      double abs_err = std::abs(got.loss - oracle);
      double rel = abs_err / std::max(1e-30, std::abs(oracle));
      // near-zero losses bottom out at machine precision; 1e-12 absolute
      // stands in for the relative bound there
      if (abs_err > 1e-12 && rel > 1e-9) ok = false;
      worst = std::max(worst, std::min(rel, abs_err));
      ++configs;
    }
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::ostringstream os;
    os << "max err " << std::scientific << std::setprecision(2) << worst << " (rel, abs near 0), "
       << configs << " configs";
    d = os.str();
    return ok && secs < 5.0;
  });

  h.run(2, "loss gradients pass finite differences on the toy encoder (<60s)",
        [](std::string& d) {
          auto start = Clock::now();
          std::vector<LabeledPair> batch = toy_batch();
          std::vector<std::string> sentences;
          std::map<std::string, int> index;
          for (const LabeledPair& p : batch)
            for (const std::string& s : {p.premise, p.hypothesis})
              if (index.emplace(s, static_cast<int>(sentences.size())).second)
                sentences.push_back(s);

          std::vector<std::string> all = sentences;
          Vocab vocab = Vocab::build(all);
          Model model = make_model(toy_encoder(), vocab, 424242);
          GroupedBatch grouped = build_groups(batch, SelectionPolicy::all(), 5);

          auto embed_all = [&](Graph& g, BoundModel& bound) {
            std::vector<Var> embs;
            for (const std::string& s : sentences)
              embs.push_back(encode(g, tokenize(s, model.vocab, model.config.max_seq_len),
                                    bound.encoder, model.config, true, nullptr));
            return embs;
          };
          auto ce_loss = [&](Graph& g, BoundModel& bound) {
            std::vector<Var> embs = embed_all(g, bound);
            std::vector<Var> rows;
            std::vector<int> classes;
            for (const LabeledPair& p : batch) {
              rows.push_back(classify_pair(g, embs[static_cast<size_t>(index.at(p.premise))],
                                           embs[static_cast<size_t>(index.at(p.hypothesis))],
                                           bound.head));
              classes.push_back(static_cast<int>(p.label));
            }
            return cross_entropy(g, stack_rows(rows), one_hot(classes, 3));
          };
          auto scl_loss = [&](Graph& g, BoundModel& bound) {
            std::vector<Var> embs = embed_all(g, bound);
            std::vector<Var> table;
            for (const std::string& s : grouped.sentences)
              table.push_back(embs[static_cast<size_t>(index.at(s))]);
            return supervised_contrastive(g, table, grouped.groups, 1.0, true);
          };
          auto combined = [&](Graph& g, BoundModel& bound) {
            return combined_loss(g, ce_loss(g, bound), scl_loss(g, bound), 0.35);
          };

          double worst = 0.0;
          int coords = 0;
          for (auto& fn : {std::function<Var(Graph&, BoundModel&)>(ce_loss),
                           std::function<Var(Graph&, BoundModel&)>(scl_loss),
                           std::function<Var(Graph&, BoundModel&)>(combined)}) {
            auto report = testutil::check_model_gradients(model, fn);
            if (report.failures > 0) {
              d = "FD failures: " + report.worst;
              return false;
            }
            worst = std::max(worst, report.max_rel);
            coords += report.coords;
          }
          double secs = std::chrono::duration<double>(Clock::now() - start).count();
          d = std::to_string(coords) + " coords across CE/SCL/combined, max rel " +
              std::to_string(worst);
          return secs < 60.0;
        });

  h.run(3, "lambda endpoints: 0 equals CE-only bitwise, 1 ignores the CE branch",
        [](std::string& d) {
          SynthSpec spec;
          spec.n_topics = 2;
          spec.premises_per_topic = 4;
          spec.seed = 17;
          std::vector<LabeledPair> corpus = gen_synth(spec).train;

          TrainConfig ce_cfg;
          ce_cfg.mode = TrainMode::CE_ONLY;
          ce_cfg.batch_size = 8;
          ce_cfg.learning_rate = 1e-3;
          ce_cfg.seed = 11;
          TrainConfig comb0 = ce_cfg;
          comb0.mode = TrainMode::COMBINED;
          comb0.hyperparams.lambda = 0.0;

          EncoderConfig ecfg = toy_encoder();
          TrainResult a = train(corpus, ce_cfg, ecfg);
          TrainResult b = train(corpus, comb0, ecfg);
          std::vector<Tensor*> pa, pb;
          visit_params(a.model, [&](const std::string&, Tensor& t) { pa.push_back(&t); });
          visit_params(b.model, [&](const std::string&, Tensor& t) { pb.push_back(&t); });
          for (size_t i = 0; i < pa.size(); ++i)
            if (!testutil::bitwise_equal(*pa[i], *pb[i])) {
              d = "lambda=0 differs from CE-only";
              return false;
            }

          // lambda = 1: different heads, identical encoder updates, heads untouched
          TrainConfig scl_cfg = ce_cfg;
          scl_cfg.mode = TrainMode::COMBINED;
          scl_cfg.hyperparams.lambda = 1.0;
          TrainState s1 = init_training(corpus, scl_cfg, ecfg);
          TrainState s2 = init_training(corpus, scl_cfg, ecfg);
          s2.model.head.w1.flat() += 0.25;
          Tensor head_before = s2.model.head.w1;
          std::vector<LabeledPair> batch(corpus.begin(), corpus.begin() + 8);
          s1.total_steps = s2.total_steps = 1;
          train_step(s1, batch);
          train_step(s2, batch);
          if (!testutil::bitwise_equal(s1.model.encoder.token_embedding,
                                       s2.model.encoder.token_embedding)) {
            d = "lambda=1 encoder update depends on the CE head";
            return false;
          }
          if (!testutil::bitwise_equal(s2.model.head.w1, head_before)) {
            d = "lambda=1 step moved the classifier head";
            return false;
          }
          return true;
        });

  h.run(4, "per-anchor loss at tau=1e6 equals log(candidate count) within 1e-3",
        [](std::string& d) {
          Rng rng(4004);
          double worst = 0.0;
          for (int trial = 0; trial < 50; ++trial) {
            SclCase s = random_scl_case(rng);
            SclResult r = supervised_contrastive(s.embeddings, s.groups, 1e6, false);
            for (size_t i = 0; i < s.groups.size(); ++i) {
              double count = static_cast<double>(s.groups[i].positives.size() +
                                                 s.groups[i].negatives.size());
              worst = std::max(worst, std::abs(r.per_anchor[i] - std::log(count)));
            }
          }
          d = "max deviation " + std::to_string(worst);
          return worst <= 1e-3;
        });

  h.run(5, "grouping matches the brute-force rule on 500 batches, plus the worked anchor",
        [](std::string& d) {
          Rng rng(5005);
          for (int trial = 0; trial < 500; ++trial) {
            std::vector<LabeledPair> batch = random_pair_batch(rng);
            GroupedBatch gb = build_groups(batch, SelectionPolicy::all(), trial);
            auto brute = testutil::grouping_bruteforce(batch);
            if (gb.groups.size() != brute.size()) {
              d = "group count mismatch on trial " + std::to_string(trial);
              return false;
            }
            for (size_t i = 0; i < brute.size(); ++i) {
              const AnchorGroup& g = gb.groups[i];
              std::set<std::string> pos, neg;
              for (int p : g.positives) pos.insert(gb.sentences[static_cast<size_t>(p)]);
              for (int n : g.negatives) neg.insert(gb.sentences[static_cast<size_t>(n)]);
              if (gb.sentences[static_cast<size_t>(g.anchor)] != brute[i].anchor ||
                  pos != brute[i].positives || neg != brute[i].negatives) {
                d = "group content mismatch on trial " + std::to_string(trial);
                return false;
              }
            }
          }

          const std::string anchor =
              "A brown dog is laying on its back on the grass with a ball in its mouth.";
          std::vector<LabeledPair> batch = {
              {anchor, "A dog is laying on is back outside.", Label::entailment},
              {anchor, "A dog is on the grass with his toy.", Label::entailment},
              {anchor, "A brown dog has a ball in its mouth.", Label::entailment},
              {anchor, "A black dog is using the restroom in the park.", Label::contradiction},
              {anchor, "a brown dog is runnig with a stick.", Label::neutral},
              {anchor, "there is a dog eating food off the table.", Label::neutral},
          };
          GroupedBatch gb = build_groups(batch, SelectionPolicy{3, 3}, 1);
          if (gb.groups.size() != 1 || gb.groups[0].positives.size() != 3 ||
              gb.groups[0].negatives.size() != 3) {
            d = "worked anchor did not yield 3 positives and 3 negatives";
            return false;
          }
          d = "500 random batches exact, worked anchor 3p/3n";
          return true;
        });

  h.run(6, "metric oracles: spearman 1e-12 on 1000 vectors, cosine hand cases, scale invariance",
        [](std::string& d) {
          Rng rng(6006);
          double worst = 0.0;
          for (int trial = 0; trial < 1000; ++trial) {
            int n = 2 + static_cast<int>(rng.below(19));
            std::vector<double> x, y;
            bool ok = false;
            while (!ok) {
              x.clear();
              y.clear();
              for (int i = 0; i < n; ++i) {
                x.push_back(static_cast<double>(rng.below(6)));  // coarse grid forces ties
                y.push_back(static_cast<double>(rng.below(6)));
              }
              auto nonconst = [](const std::vector<double>& v) {
                for (double t : v)
                  if (t != v[0]) return true;
                return false;
              };
              ok = nonconst(x) && nonconst(y);
            }
            worst = std::max(worst, std::abs(spearman(x, y) - testutil::spearman_bruteforce(x, y)));
          }
          if (worst > 1e-12) {
            d = "spearman max err " + std::to_string(worst);
            return false;
          }

          Eigen::VectorXd a(2), b(2), c(2);
          a << 1, 1;
          b << 1, 0;
          c << 0, 1;
          if (cosine_similarity(b, b) != 1.0 || cosine_similarity(b, c) != 0.0 ||
              std::abs(cosine_similarity(a, b) - 1.0 / std::sqrt(2.0)) > 1e-12) {
            d = "cosine hand cases failed";
            return false;
          }

          std::vector<StsPair> pairs;
          std::vector<Tensor> ea, eb;
          for (int i = 0; i < 24; ++i) {
            pairs.push_back({i % 2 ? "a" : "b", "x", "y", static_cast<double>(i % 6)});
            ea.push_back(testutil::random_tensor_away_from_zero({6}, rng, 0.2));
            eb.push_back(testutil::random_tensor_away_from_zero({6}, rng, 0.2));
          }
          double base = sts_score_from_embeddings(pairs, ea, eb);
          for (double scale_factor : {2.0, 0.5, 1024.0}) {
            std::vector<Tensor> sa = ea, sb = eb;
            for (Tensor& t : sa) t.flat() *= scale_factor;
            for (Tensor& t : sb) t.flat() *= scale_factor;
            if (sts_score_from_embeddings(pairs, sa, sb) != base) {
              d = "scale invariance violated at factor " + std::to_string(scale_factor);
              return false;
            }
          }
          d = "spearman max err " + std::to_string(worst);
          return true;
        });

  h.run(7, "combined training beats CE-only and Augment on synthetic STS (>=4/5 seeds, <10min)",
        [](std::string& d) {
          auto start = Clock::now();
          SynthSpec spec;
          spec.n_topics = 4;
          spec.premises_per_topic = 50;
          spec.hypotheses_per_premise = 3;
          spec.seed = 7;
          SynthData data = gen_synth(spec);

          int beats_ce = 0, beats_augment = 0;
          std::ostringstream log;
          for (uint64_t seed = 1; seed <= 5; ++seed) {
            double combined = synth_sts_score(data, TrainMode::COMBINED, 0.5, seed);
            double ce_only = synth_sts_score(data, TrainMode::CE_ONLY, 0.0, seed);
            double augment = synth_sts_score(data, TrainMode::AUGMENT, 0.0, seed);
            if (combined > ce_only) ++beats_ce;
            if (combined > augment) ++beats_augment;
            log << " seed" << seed << " scl=" << std::fixed << std::setprecision(1) << combined
                << " ce=" << ce_only << " aug=" << augment;
          }
          double secs = std::chrono::duration<double>(Clock::now() - start).count();
          d = "beats CE " + std::to_string(beats_ce) + "/5, beats Augment " +
              std::to_string(beats_augment) + "/5," + log.str();
          return beats_ce >= 4 && beats_augment >= 4 && secs < 600.0;
        });

  h.run(8, "probe sanity: separable >=99, random within 50+-4, folds partition exactly",
        [](std::string& d) {
          Rng rng(8008);
          int n = 120, dim = 4;
          Eigen::MatrixXd sep(n, dim);
          std::vector<int> sep_labels;
          for (int i = 0; i < n; ++i) {
            int y = static_cast<int>(rng.below(2));
            sep_labels.push_back(y);
            for (int j = 1; j < dim; ++j) sep(i, j) = rng.uniform(-1, 1);
            sep(i, 0) = (y == 1 ? 2.0 : -2.0) + rng.uniform(-0.2, 0.2);
          }
          double sep_acc = probe_accuracy(sep, sep_labels, 2, 1);
          if (sep_acc < 99.0) {
            d = "separable accuracy " + std::to_string(sep_acc);
            return false;
          }

          int m = 2000;
          Eigen::MatrixXd rnd(m, 8);
          std::vector<int> rnd_labels;
          for (int i = 0; i < m; ++i) {
            rnd_labels.push_back(static_cast<int>(rng.below(2)));
            for (int j = 0; j < 8; ++j) rnd(i, j) = rng.uniform(-1, 1);
          }
          double rnd_acc = probe_accuracy(rnd, rnd_labels, 2, 2);
          if (rnd_acc < 46.0 || rnd_acc > 54.0) {
            d = "random-label accuracy " + std::to_string(rnd_acc);
            return false;
          }

          for (int nn : {100, 103, 1009}) {
            std::vector<int> fold = fold_assignment(nn, 10, 99);
            std::vector<int> counts(10, 0);
            for (int f : fold) {
              if (f < 0 || f >= 10) {
                d = "fold id out of range";
                return false;
              }
              ++counts[static_cast<size_t>(f)];
            }
            int total = 0, mn = counts[0], mx = counts[0];
            for (int c : counts) {
              total += c;
              mn = std::min(mn, c);
              mx = std::max(mx, c);
            }
            if (total != nn || mx - mn > 1) {
              d = "fold partition violated for n=" + std::to_string(nn);
              return false;
            }
          }
          d = "separable " + std::to_string(sep_acc) + ", random " + std::to_string(rnd_acc);
          return true;
        });

  h.run(9, "same config+seed reproduces checkpoints and reports bitwise", [](std::string& d) {
    SynthSpec spec;
    spec.n_topics = 2;
    spec.premises_per_topic = 6;
    spec.sts_pairs_per_band = 4;
    spec.seed = 31;
    SynthData data = gen_synth(spec);

    TrainConfig cfg;
    cfg.mode = TrainMode::COMBINED;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 2;
    cfg.seed = 77;
    EncoderConfig ecfg = toy_encoder();

    std::string p1 = temp_file("c9_a.bin"), p2 = temp_file("c9_b.bin"),
                p3 = temp_file("c9_c.bin");
    TrainResult r1 = train(data.train, cfg, ecfg);
    TrainResult r2 = train(data.train, cfg, ecfg);
    save_checkpoint({Checkpoint::kCheckpointFormatVersion, r1.model, cfg, r1.steps}, p1);
    save_checkpoint({Checkpoint::kCheckpointFormatVersion, r2.model, cfg, r2.steps}, p2);
    if (read_bytes(p1) != read_bytes(p2)) {
      d = "checkpoints differ across identical runs";
      return false;
    }

    // round-trip: load then save again, bit for bit
    Checkpoint loaded = load_checkpoint(p1);
    save_checkpoint(loaded, p3);
    if (read_bytes(p1) != read_bytes(p3)) {
      d = "checkpoint round-trip not bitwise";
      return false;
    }

    std::string rep1 = temp_file("c9_rep1.json"), rep2 = temp_file("c9_rep2.json");
    double s1 = eval_sts(data.sts, r1.model);
    double s2 = eval_sts(data.sts, loaded.model);
    write_report_json(make_report({{"synth-sts", s1}}), rep1);
    write_report_json(make_report({{"synth-sts", s2}}), rep2);
    if (read_bytes(rep1) != read_bytes(rep2)) {
      d = "evaluation reports differ";
      return false;
    }
    for (const std::string& p : {p1, p2, p3, rep1, rep2}) std::filesystem::remove(p);
    return true;
  });

  if (h.failures == 0) {
    std::cout << "acceptance: all criteria passed" << std::endl;
    return 0;
  }
  std::cout << "acceptance: " << h.failures << " criterion(s) failed" << std::endl;
  return 1;
}
