// Acceptance suite: runs every release criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.

#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "phintent/archive.hpp"
#include "phintent/corpus.hpp"
#include "phintent/experiments.hpp"
#include "phintent/naive_bayes.hpp"
#include "phintent/network.hpp"
#include "phintent/rng.hpp"
#include "phintent/sampling.hpp"
#include "phintent/synthgen.hpp"
#include "support/nb_oracle.hpp"

using namespace phintent;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 1) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// ---- shared infrastructure --------------------------------------------------

struct CliRun {
  int exit_code = -1;
  std::string output;
};

CliRun run_cli(const std::string& args) {
  std::string cmd = std::string(PHINTENT_BIN) + " " + args + " 2>&1";
  CliRun result;
  std::array<char, 4096> buf;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return result;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    result.output.append(buf.data(), n);
  }
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("phintent_acceptance_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// Experiment configuration for the preset-scale trend criteria. Dimensions
// are reduced from the 128-wide defaults so the full suite runs on one core;
// the architecture (two conv branches into an LSTM) is unchanged.
ExperimentConfig trend_config() {
  ExperimentConfig cfg;
  cfg.nb = NBConfig{};  // unigrams, absolute discounting, delta 0.5
  cfg.nn.embed_dim = 32;
  cfg.nn.conv_channels = 32;
  cfg.nn.kernel_sizes = {3, 5};
  cfg.nn.lstm_hidden = 48;
  cfg.hyper.learning_rate = 2e-3;
  cfg.hyper.batch_size = 32;
  cfg.hyper.max_epochs = 8;
  cfg.hyper.stop_train_accuracy = 0.995;
  cfg.seeds = {1, 2, 3, 4, 5};
  unsigned hw = std::thread::hardware_concurrency();
  cfg.threads = hw > 1 ? static_cast<int>(hw) : 1;
  return cfg;
}

// Distinct per-class utterance counts keep the priors distinct, so no two
// classes can tie analytically and the argmax comparison is well-posed.
Corpus random_small_corpus(Rng& rng) {
  Corpus corpus;
  int vocab = 2 + static_cast<int>(rng.next_index(4));  // V <= 5
  int intents = 2 + static_cast<int>(rng.next_index(2));
  for (int v = 1; v <= vocab; ++v) {
    corpus.inventory.add("p" + std::to_string(v));
  }
  for (int c = 0; c < intents; ++c) {
    corpus.labels.intern("i" + std::to_string(c));
  }
  int extra = static_cast<int>(rng.next_index(2));
  for (int c = 0; c < intents; ++c) {
    for (int i = 0; i < c + 1 + extra; ++i) {  // counts 1,2,3 or 2,3,4
      Utterance u;
      u.language = "l";
      u.intent = c;
      int len = 1 + static_cast<int>(rng.next_index(6));
      for (int t = 0; t < len; ++t) {
        u.phones.push_back(1 + static_cast<int>(rng.next_index(vocab)));
      }
      corpus.utterances.push_back(std::move(u));
    }
  }
  return corpus;
}

// ---- criteria ----------------------------------------------------------------

Outcome c1_nb_oracle() {
  auto start = Clock::now();
  Rng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Corpus corpus = random_small_corpus(rng);
    for (int n : {1, 2}) {
      for (Smoothing mode : {Smoothing::kAddOne, Smoothing::kAbsoluteDiscount}) {
        NBConfig cfg{n, mode, 0.5};
        NBModel model = train_nb(corpus, cfg);
        for (int p = 0; p < 6; ++p) {
          Utterance u;
          u.language = "l";
          u.intent = 0;
          int len = 1 + static_cast<int>(rng.next_index(6));
          for (int t = 0; t < len; ++t) {
            u.phones.push_back(1 + static_cast<int>(rng.next_index(
                                       corpus.inventory.size() - 1)));
          }
          auto got = nb_log_posterior(model, u);
          auto want = phintent::testing::nb_oracle_scores(corpus, cfg, u);
          for (std::size_t c = 0; c < got.size(); ++c) {
            worst = std::max(worst, std::abs(got[c] - want[c]));
          }
          if (nb_predict(model, u) !=
              phintent::testing::nb_oracle_predict(corpus, cfg, u)) {
            return {false, "argmax mismatch"};
          }
        }
      }
    }
  }
  double elapsed = seconds_since(start);
  bool pass = worst < 1e-9 && elapsed < 1.0;
  return {pass, "max |score diff| " + fmt(worst * 1e12, 3) + "e-12, " +
                    fmt(elapsed, 2) + "s"};
}

Outcome c2_normalization() {
  auto start = Clock::now();
  Rng rng(1002);
  double worst = 0.0;
  int models = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Corpus corpus = random_small_corpus(rng);
    std::vector<NBConfig> configs = {
        NBConfig{1, Smoothing::kAddOne, 0.5},
        NBConfig{2, Smoothing::kAddOne, 0.5},
        NBConfig{1, Smoothing::kAbsoluteDiscount, 0.1},
        NBConfig{1, Smoothing::kAbsoluteDiscount, 0.5},
        NBConfig{2, Smoothing::kAbsoluteDiscount, 1.0}};
    for (const NBConfig& cfg : configs) {
      NBModel model = train_nb(corpus, cfg);
      ++models;
      const int V = corpus.inventory.size() - 1;
      const int n = cfg.ngram_order;
      for (int c = 0; c < model.num_intents(); ++c) {
        double sum = 0.0;
        std::vector<int> gram(n, 1);
        while (true) {
          sum += ngram_probability(model, c,
                                   encode_ngram(gram, corpus.inventory.size()));
          int pos = 0;
          while (pos < n && ++gram[pos] > V) {
            gram[pos] = 1;
            ++pos;
          }
          if (pos == n) break;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
      }
    }
  }
  double elapsed = seconds_since(start);
  bool pass = worst < 1e-9 && elapsed < 5.0;
  return {pass, std::to_string(models) + " models, max |sum-1| " +
                    fmt(worst * 1e12, 3) + "e-12, " + fmt(elapsed, 2) + "s"};
}

Outcome c3_gradient_check() {
  auto start = Clock::now();
  NNConfig cfg;
  cfg.vocab_size = 12;
  cfg.embed_dim = 8;
  cfg.conv_channels = 6;
  cfg.kernel_sizes = {3, 5};
  cfg.lstm_hidden = 10;
  cfg.num_intents = 3;
  GradCheckReport report = grad_check(cfg, 42, 1e-5, 1e-4);
  double elapsed = seconds_since(start);
  double worst = 0.0;
  for (const auto& t : report.tensors) worst = std::max(worst, t.max_rel_err);
  bool pass = report.all_pass && elapsed < 30.0;
  return {pass, "max rel err " + fmt(worst * 1e6, 3) + "e-6 over " +
                    std::to_string(report.tensors.size()) + " tensors, " +
                    fmt(elapsed, 1) + "s"};
}

Outcome c4_overfit() {
  auto start = Clock::now();
  // 32 separable utterances: 4 intents, one disjoint motif each.
  Rng rng(1004);
  Corpus corpus;
  const int vocab = 20, motif_len = 5, length = 12;
  for (int v = 1; v <= vocab; ++v) {
    corpus.inventory.add("p" + std::to_string(v));
  }
  for (int c = 0; c < 4; ++c) {
    corpus.labels.intern("i" + std::to_string(c));
  }
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 8; ++i) {
      Utterance u;
      u.language = "l";
      u.intent = c;
      u.phones.resize(length);
      for (int& p : u.phones) {
        p = 1 + static_cast<int>(rng.next_index(vocab));
      }
      int pos = static_cast<int>(rng.next_index(length - motif_len + 1));
      for (int j = 0; j < motif_len; ++j) {
        u.phones[pos + j] = 1 + c * motif_len + j;
      }
      corpus.utterances.push_back(std::move(u));
    }
  }

  NNConfig cfg;  // paper-default dimensions
  cfg.vocab_size = corpus.inventory.size();
  cfg.num_intents = corpus.labels.size();
  TrainHyper hyper;  // Adam, lr 1e-3, batch 32
  hyper.max_epochs = 300;
  hyper.seed = 7;
  hyper.stop_train_accuracy = 1.0;
  TrainResult result = train_nn(corpus, cfg, hyper);
  double elapsed = seconds_since(start);
  double final_acc = result.history.epochs.back().train_accuracy;
  bool pass = final_acc == 1.0 && result.history.epochs.size() <= 300 &&
              elapsed < 120.0;
  return {pass, "accuracy " + fmt(100 * final_acc) + " after " +
                    std::to_string(result.history.epochs.size()) +
                    " epochs, " + fmt(elapsed, 1) + "s"};
}

Outcome c5_padding_invariance() {
  NNConfig cfg;
  cfg.vocab_size = 30;
  cfg.embed_dim = 16;
  cfg.conv_channels = 12;
  cfg.kernel_sizes = {3, 5};
  cfg.lstm_hidden = 16;
  cfg.num_intents = 4;
  NNModel model = init_model(cfg, 1005);
  Rng rng(1006);
  for (int trial = 0; trial < 100; ++trial) {
    int len = 1 + static_cast<int>(rng.next_index(40));
    std::vector<int> phones(len);
    for (int& p : phones) {
      p = 1 + static_cast<int>(rng.next_index(cfg.vocab_size - 1));
    }
    int extra1 = static_cast<int>(rng.next_index(6));
    int extra2 = 1 + static_cast<int>(rng.next_index(12));
    auto padded_logits = [&](int width) {
      Batch batch;
      batch.tokens = Eigen::MatrixXi::Constant(1, width, NNConfig::pad_index);
      for (int t = 0; t < len; ++t) batch.tokens(0, t) = phones[t];
      batch.lengths = {len};
      return forward(model, batch).logits;
    };
    Eigen::MatrixXd a = padded_logits(len + extra1);
    Eigen::MatrixXd b = padded_logits(len + extra1 + extra2);
    for (int i = 0; i < a.cols(); ++i) {
      if (a(0, i) != b(0, i)) {
        return {false, "logit differs at trial " + std::to_string(trial)};
      }
    }
  }
  return {true, "100 utterances, two widths each, bitwise equal"};
}

Outcome c6_cli_determinism() {
  TempDir dir;
  std::string gen_flags =
      "gen --languages 4 --inventory 16 --intents 3 --motifs-per-intent 1 "
      "--motif-length 4 --min-len 6 --max-len 10 --overlap 0.7 --noise 0.02 "
      "--per-cell 10 --family tiny --seed 5 --out-dir " +
      dir.path.string();
  if (run_cli(gen_flags).exit_code != 0) return {false, "gen failed"};

  std::string corpora;
  for (int i = 1; i <= 4; ++i) {
    if (i > 1) corpora += ",";
    corpora += dir.file("tiny_lang" + std::to_string(i) + ".tsv");
  }
  std::string nn_flags =
      "--embed 8 --channels 6 --kernels 3,5 --lstm 8 --epochs 3";

  auto t1 = run_cli("train --corpus " + dir.file("tiny_lang1.tsv") +
                    " --classifier nn " + nn_flags + " --seed 4 --model-out " +
                    dir.file("m1.json"));
  if (t1.exit_code != 0) return {false, "train failed: " + t1.output};
  auto t2 = run_cli("train --config " + dir.file("m1.json.manifest.json") +
                    " --model-out " + dir.file("m2.json"));
  if (t2.exit_code != 0) return {false, "train rerun failed"};
  if (read_file(dir.file("m1.json")) != read_file(dir.file("m2.json"))) {
    return {false, "archives differ"};
  }

  auto m1 = run_cli("matrix --corpus " + corpora + " " + nn_flags +
                    " --seeds 1,2 --out-dir " + dir.file("r1"));
  if (m1.exit_code != 0) return {false, "matrix failed: " + m1.output};
  auto m2 = run_cli("matrix --config " + dir.file("r1/matrix.manifest.json") +
                    " --out-dir " + dir.file("r2"));
  if (m2.exit_code != 0) return {false, "matrix rerun failed"};
  if (read_file(dir.file("r1/matrix.csv")) !=
      read_file(dir.file("r2/matrix.csv"))) {
    return {false, "matrix CSVs differ"};
  }
  return {true, "archive and CSV bytes identical under --config reruns"};
}

struct TrendData {
  std::map<std::string, SplitPair> splits;
  EvalMatrix mono;
  EvalMatrix multi;
  double mono_seconds = 0.0;
};

TrendData run_trend_matrices() {
  TrendData data;
  FamilySpec preset = family_preset("indic-like");
  Corpus merged = merge_family(generate_family(preset, 91));
  data.splits = split_by_language(merged, {0.2, 17});
  ExperimentConfig cfg = trend_config();
  auto start = Clock::now();
  data.mono = monolingual_matrix(data.splits, cfg);
  data.mono_seconds = seconds_since(start);
  data.multi = multilingual_matrix(data.splits, 3, std::nullopt, cfg);
  return data;
}

Outcome c7_trend_monolingual(const TrendData& data) {
  double nn_diag = 0.0, nn_off = 0.0, nb_diag = 0.0, nb_off = 0.0;
  const std::size_t L = data.mono.row_labels.size();
  for (std::size_t r = 0; r < L; ++r) {
    for (std::size_t c = 0; c < L; ++c) {
      const MatrixCell& cell = data.mono.cells[r][c];
      if (r == c) {
        nn_diag += cell.nn_mean / L;
        nb_diag += cell.nb_mean / L;
      } else {
        nn_off += cell.nn_mean / (L * L - L);
        nb_off += cell.nb_mean / (L * L - L);
      }
    }
  }
  bool pass = (nn_diag - nn_off >= 10.0) && (nb_diag - nb_off >= 10.0) &&
              data.mono_seconds < 900.0;
  return {pass, "NN " + fmt(nn_diag) + " vs " + fmt(nn_off) + ", NB " +
                    fmt(nb_diag) + " vs " + fmt(nb_off) + ", " +
                    fmt(data.mono_seconds, 0) + "s"};
}

Outcome c8_trend_multilingual(const TrendData& data) {
  int wins = 0;
  std::string detail;
  for (std::size_t r = 0; r < data.multi.row_labels.size(); ++r) {
    std::size_t blind_col = 0;
    for (std::size_t c = 0; c < data.multi.col_labels.size(); ++c) {
      if (data.multi.blind[r][c]) blind_col = c;
    }
    double multi_acc = data.multi.cells[r][blind_col].nn_mean;
    double best_mono = 0.0;
    for (std::size_t mr = 0; mr < data.mono.row_labels.size(); ++mr) {
      if (data.multi.blind[r][mr]) continue;  // row languages only
      best_mono =
          std::max(best_mono, data.mono.cells[mr][blind_col].nn_mean);
    }
    wins += multi_acc > best_mono;
    detail += (detail.empty() ? "" : ", ") + fmt(multi_acc) + ">" +
              fmt(best_mono);
  }
  return {wins >= 3, std::to_string(wins) + "/4 subsets (" + detail + ")"};
}

Outcome c10_trend_nn_vs_nb(const TrendData& data) {
  double nn_diag = 0.0, nb_diag = 0.0;
  const std::size_t L = data.mono.row_labels.size();
  for (std::size_t r = 0; r < L; ++r) {
    nn_diag += data.mono.cells[r][r].nn_mean / L;
    nb_diag += data.mono.cells[r][r].nb_mean / L;
  }
  return {nn_diag >= nb_diag,
          "NN diagonal " + fmt(nn_diag) + ", NB diagonal " + fmt(nb_diag)};
}

Outcome c9_trend_injection(const TrendData& data) {
  ExperimentConfig cfg = trend_config();
  std::vector<std::string> langs;
  for (const auto& [lang, pair] : data.splits) langs.push_back(lang);
  std::vector<std::string> T(langs.begin(), langs.end() - 1);
  std::string blind = langs.back();
  InjectionSchedule schedule{blind, {0.0, 0.05, 0.10, 0.15, 0.20, 0.25}};
  InjectionCurve curve =
      injection_curve(data.splits, T, schedule, std::nullopt, cfg);

  std::size_t blind_col = 0;
  for (std::size_t c = 0; c < curve.eval_languages.size(); ++c) {
    if (curve.eval_languages[c] == blind) blind_col = c;
  }
  double gain = curve.points[1][blind_col].nn_mean -
                curve.points[0][blind_col].nn_mean;
  double max_shift = 0.0;
  for (std::size_t c = 0; c < curve.eval_languages.size(); ++c) {
    if (c == blind_col) continue;
    max_shift = std::max(
        max_shift, std::abs(curve.points[5][c].nn_mean -
                            curve.points[0][c].nn_mean));
  }
  bool pass = gain >= 5.0 && max_shift < 3.0;
  return {pass, "blind gain at r=0.05: " + fmt(gain) +
                    " pts, max train-language shift to r=0.25: " +
                    fmt(max_shift) + " pts"};
}

Outcome c11_report_fidelity() {
  TempDir dir;
  // The preset's language/intent structure at reduced corpus scale.
  std::string gen_flags =
      "gen --preset indic-like --inventory 16 --motif-length 4 --min-len 6 "
      "--max-len 10 --per-cell 6 --seed 2 --out-dir " +
      dir.path.string();
  if (run_cli(gen_flags).exit_code != 0) return {false, "gen failed"};
  std::string corpora;
  for (int i = 1; i <= 4; ++i) {
    if (i > 1) corpora += ",";
    corpora += dir.file("indic-like_lang" + std::to_string(i) + ".tsv");
  }
  auto r = run_cli("multi --n 3 --corpus " + corpora +
                   " --embed 8 --channels 6 --lstm 8 --epochs 2 --seeds 1 "
                   "--test-fraction 0.34 --out-dir " +
                   dir.file("out"));
  if (r.exit_code != 0) return {false, "multi failed: " + r.output};

  std::istringstream md(read_file(dir.file("out/multi.md")));
  std::string line;
  std::getline(md, line);  // header
  int columns = 0;
  for (std::size_t p = line.find('|', 1); p != std::string::npos;
       p = line.find('|', p + 1)) {
    ++columns;
  }
  columns -= 1;  // corner cell
  std::getline(md, line);  // separator
  std::regex plain_re(R"(^\d+\.\d\(\d+\.\d\)$)");
  int rows = 0;
  while (std::getline(md, line)) {
    ++rows;
    std::istringstream fields(line);
    std::string tok;
    std::vector<std::string> cells;
    while (std::getline(fields, tok, '|')) {
      if (!tok.empty() && tok != " ") cells.push_back(tok);
    }
    if (static_cast<int>(cells.size()) != columns + 1) {
      return {false, "row has wrong cell count: " + line};
    }
    int bold = 0;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      std::string cell = cells[i].substr(1, cells[i].size() - 2);
      if (cell.starts_with("**")) {
        ++bold;
        cell = cell.substr(2, cell.size() - 4);
      }
      if (!std::regex_match(cell, plain_re)) {
        return {false, "cell format violation: " + cell};
      }
    }
    if (bold != 1) return {false, "row has " + std::to_string(bold) +
                                      " blind cells"};
  }
  if (rows != 4 || columns != 4) {
    return {false, "grid is " + std::to_string(rows) + "x" +
                       std::to_string(columns)};
  }
  return {true, "4x4 grid, one blind cell per row, NN(NB) cells"};
}

}  // namespace

int main() {
  struct Entry {
    std::string label;
    Outcome outcome;
  };
  std::vector<Entry> entries;

  entries.push_back({"C1 NB oracle equivalence", c1_nb_oracle()});
  entries.push_back({"C2 smoothing normalization", c2_normalization()});
  entries.push_back({"C3 gradient check", c3_gradient_check()});
  entries.push_back({"C4 overfit sanity", c4_overfit()});
  entries.push_back({"C5 padding invariance", c5_padding_invariance()});
  entries.push_back({"C6 manifest determinism", c6_cli_determinism()});

  TrendData data = run_trend_matrices();
  entries.push_back({"C7 trend: diagonal beats cross-lingual",
                     c7_trend_monolingual(data)});
  entries.push_back({"C8 trend: multilingual wins on the blind language",
                     c8_trend_multilingual(data)});
  entries.push_back({"C9 trend: small injection lifts the blind language",
                     c9_trend_injection(data)});
  entries.push_back({"C10 trend: NN at least matches NB on the diagonal",
                     c10_trend_nn_vs_nb(data)});
  entries.push_back({"C11 report fidelity", c11_report_fidelity()});

  bool all_pass = true;
  for (const auto& e : entries) {
    all_pass = all_pass && e.outcome.pass;
    std::printf("[%s] %s (%s)\n", e.outcome.pass ? "PASS" : "FAIL",
                e.label.c_str(), e.outcome.details.c_str());
  }
  std::printf("%s\n", all_pass ? "acceptance: all criteria PASS"
                               : "acceptance: FAILURES present");
  return all_pass ? 0 : 1;
}
