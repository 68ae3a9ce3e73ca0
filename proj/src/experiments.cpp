#include "phintent/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <mutex>
#include <set>
#include <thread>

#include "phintent/rng.hpp"

namespace phintent {

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

// Shortest round-trip decimal for CSV values.
std::string fmt_full(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_one_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

NNConfig instantiate(const NNConfig& tmpl, const Corpus& corpus) {
  NNConfig cfg = tmpl;
  cfg.vocab_size = corpus.inventory.size();
  cfg.num_intents = corpus.labels.size();
  return cfg;
}

// Runs tasks, optionally across worker threads; each task writes to its own
// preallocated slots, so the merge is order-independent.
void run_tasks(std::vector<std::function<void()>>& tasks, int threads) {
  if (threads <= 1 || tasks.size() <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      try {
        tasks[i]();
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  int n = std::min<int>(threads, static_cast<int>(tasks.size()));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void fill_means(MatrixCell& cell) {
  double nn = 0.0, nb = 0.0;
  for (double v : cell.nn_by_seed) nn += v;
  for (double v : cell.nb_by_seed) nb += v;
  cell.nn_mean = nn / static_cast<double>(cell.nn_by_seed.size());
  cell.nb_mean = nb / static_cast<double>(cell.nb_by_seed.size());
}

std::vector<std::vector<std::string>> combinations(
    const std::vector<std::string>& items, int k) {
  std::vector<std::vector<std::string>> out;
  std::vector<int> pick(k);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == k) {
      std::vector<std::string> combo;
      for (int idx : pick) combo.push_back(items[idx]);
      out.push_back(std::move(combo));
      return;
    }
    for (int i = start; i <= static_cast<int>(items.size()) - (k - depth);
         ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  if (k >= 1 && k <= static_cast<int>(items.size())) rec(0, 0);
  return out;
}

struct TrainedPair {
  NNModel nn;
  NBModel nb;
};

TrainedPair train_pair(const Corpus& train, const ExperimentConfig& config,
                       std::uint64_t nn_seed) {
  TrainedPair pair;
  NNConfig cfg = instantiate(config.nn, train);
  TrainHyper hyper = config.hyper;
  hyper.seed = nn_seed;
  pair.nn = train_nn(train, cfg, hyper).model;
  pair.nb = train_nb(train, config.nb);
  return pair;
}

void evaluate_into(const TrainedPair& pair,
                   const std::map<std::string, SplitPair>& splits,
                   const std::vector<std::string>& cols, std::size_t seed_idx,
                   std::vector<MatrixCell>& row_cells) {
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const Corpus& test = splits.at(cols[c]).test;
    row_cells[c].nn_by_seed[seed_idx] = evaluate(
        [&pair](const Utterance& u) { return nn_predict(pair.nn, u); }, test);
    row_cells[c].nb_by_seed[seed_idx] = evaluate(
        [&pair](const Utterance& u) { return nb_predict(pair.nb, u); }, test);
  }
}

}  // namespace

std::map<std::string, SplitPair> split_by_language(const Corpus& merged,
                                                   const SplitSpec& spec) {
  SplitResult result = split(merged, spec);
  std::map<std::string, SplitPair> out;
  for (const auto& lang : merged.languages()) {
    out.emplace(lang, SplitPair{filter_language(result.train, lang),
                                filter_language(result.test, lang)});
  }
  return out;
}

double evaluate(const std::function<int(const Utterance&)>& predict,
                const Corpus& test) {
  if (test.utterances.empty()) throw EmptyCorpus();
  std::size_t correct = 0;
  for (const auto& u : test.utterances) {
    if (predict(u) == u.intent) ++correct;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(test.utterances.size());
}

EvalMatrix monolingual_matrix(const std::map<std::string, SplitPair>& splits,
                              const ExperimentConfig& config) {
  if (splits.size() < 2) {
    throw std::invalid_argument("monolingual matrix needs >= 2 languages");
  }
  EvalMatrix m;
  m.experiment = "monolingual";
  m.seeds = config.seeds;
  for (const auto& [lang, pair] : splits) {
    m.row_labels.push_back(lang);
    m.col_labels.push_back(lang);
  }
  const std::size_t R = m.row_labels.size(), S = config.seeds.size();
  m.cells.assign(R, std::vector<MatrixCell>(R));
  m.blind.assign(R, std::vector<bool>(R, false));
  for (auto& row : m.cells) {
    for (auto& cell : row) {
      cell.nn_by_seed.assign(S, 0.0);
      cell.nb_by_seed.assign(S, 0.0);
    }
  }

  std::vector<std::function<void()>> tasks;
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t si = 0; si < S; ++si) {
      tasks.push_back([&, r, si] {
        const std::string& lang = m.row_labels[r];
        TrainedPair pair =
            train_pair(splits.at(lang).train, config,
                       derive_seed(config.seeds[si], "nn-mono:" + lang));
        evaluate_into(pair, splits, m.col_labels, si, m.cells[r]);
      });
    }
  }
  run_tasks(tasks, config.threads);
  for (auto& row : m.cells) {
    for (auto& cell : row) fill_means(cell);
  }
  return m;
}

EvalMatrix multilingual_matrix(const std::map<std::string, SplitPair>& splits,
                               int subset_size,
                               std::optional<std::size_t> budget,
                               const ExperimentConfig& config) {
  const int m_langs = static_cast<int>(splits.size());
  if (!(subset_size >= 2 && subset_size < m_langs)) {
    throw std::invalid_argument(
        "need total languages > subset size >= 2");
  }

  std::vector<std::string> langs;
  std::map<std::string, Corpus> trains;
  std::size_t min_train = static_cast<std::size_t>(-1);
  for (const auto& [lang, pair] : splits) {
    langs.push_back(lang);
    trains.emplace(lang, pair.train);
    min_train = std::min(min_train, pair.train.size());
  }
  std::size_t B = budget.value_or(min_train);

  EvalMatrix m;
  m.experiment = "multilingual";
  m.seeds = config.seeds;
  m.col_labels = langs;
  auto subsets = combinations(langs, subset_size);
  for (const auto& subset : subsets) m.row_labels.push_back(join(subset, '+'));

  const std::size_t R = subsets.size(), C = langs.size(),
                    S = config.seeds.size();
  m.cells.assign(R, std::vector<MatrixCell>(C));
  m.blind.assign(R, std::vector<bool>(C, false));
  for (std::size_t r = 0; r < R; ++r) {
    std::set<std::string> in_train(subsets[r].begin(), subsets[r].end());
    for (std::size_t c = 0; c < C; ++c) {
      m.blind[r][c] = !in_train.count(langs[c]);
      m.cells[r][c].nn_by_seed.assign(S, 0.0);
      m.cells[r][c].nb_by_seed.assign(S, 0.0);
    }
  }

  std::vector<std::function<void()>> tasks;
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t si = 0; si < S; ++si) {
      tasks.push_back([&, r, si] {
        const std::string& label = m.row_labels[r];
        MultilingualSpec spec{subsets[r], B};
        Corpus mixed = compose_multilingual_train(
            trains, spec,
            derive_seed(config.seeds[si], "compose:" + label));
        TrainedPair pair =
            train_pair(mixed, config,
                       derive_seed(config.seeds[si], "nn-multi:" + label));
        evaluate_into(pair, splits, m.col_labels, si, m.cells[r]);
      });
    }
  }
  run_tasks(tasks, config.threads);
  for (auto& row : m.cells) {
    for (auto& cell : row) fill_means(cell);
  }
  return m;
}

InjectionCurve injection_curve(const std::map<std::string, SplitPair>& splits,
                               const std::vector<std::string>& train_languages,
                               const InjectionSchedule& schedule,
                               std::optional<std::size_t> budget,
                               const ExperimentConfig& config) {
  if (schedule.ratios.empty()) {
    throw std::invalid_argument("injection schedule has no ratios");
  }
  for (std::size_t i = 0; i < schedule.ratios.size(); ++i) {
    double r = schedule.ratios[i];
    if (!(r >= 0.0 && r <= 1.0)) {
      throw std::invalid_argument("ratios must lie in [0,1]");
    }
    if (i > 0 && !(r > schedule.ratios[i - 1])) {
      throw std::invalid_argument("ratios must be strictly ascending");
    }
  }
  std::vector<std::string> T = train_languages;
  std::sort(T.begin(), T.end());
  if (std::adjacent_find(T.begin(), T.end()) != T.end()) {
    throw std::invalid_argument("duplicate train language");
  }
  const std::string& blind = schedule.blind_language;
  for (const auto& lang : T) {
    if (!splits.count(lang)) throw InsufficientData(lang);
    if (lang == blind) throw LanguageCollision(lang);
  }
  if (!splits.count(blind)) throw InsufficientData(blind);

  std::map<std::string, Corpus> trains;
  std::size_t min_train = static_cast<std::size_t>(-1);
  for (const auto& [lang, pair] : splits) {
    trains.emplace(lang, pair.train);
    min_train = std::min(min_train, pair.train.size());
  }
  std::size_t B = budget.value_or(min_train);

  InjectionCurve curve;
  curve.seeds = config.seeds;
  curve.train_languages = T;
  curve.blind_language = blind;
  curve.ratios = schedule.ratios;
  std::set<std::string> eval_set(T.begin(), T.end());
  eval_set.insert(blind);
  curve.eval_languages.assign(eval_set.begin(), eval_set.end());

  const std::size_t NR = curve.ratios.size(),
                    NL = curve.eval_languages.size(),
                    S = config.seeds.size();
  curve.points.assign(NR, std::vector<MatrixCell>(NL));
  for (auto& row : curve.points) {
    for (auto& cell : row) {
      cell.nn_by_seed.assign(S, 0.0);
      cell.nb_by_seed.assign(S, 0.0);
    }
  }

  const std::string label = join(T, '+');
  std::vector<std::function<void()>> tasks;
  for (std::size_t ri = 0; ri < NR; ++ri) {
    for (std::size_t si = 0; si < S; ++si) {
      tasks.push_back([&, ri, si] {
        std::uint64_t s = config.seeds[si];
        MultilingualSpec spec{T, B};
        Corpus base = compose_multilingual_train(
            trains, spec, derive_seed(s, "compose:" + label));
        Corpus injected =
            inject(base, splits.at(blind).train, curve.ratios[ri],
                   derive_seed(s, "inject:" + label + ">" + blind));
        // Same training seed as the multilingual run, so r = 0 reproduces
        // the corresponding multilingual cell exactly.
        TrainedPair pair = train_pair(
            injected, config, derive_seed(s, "nn-multi:" + label));
        for (std::size_t c = 0; c < NL; ++c) {
          const Corpus& test = splits.at(curve.eval_languages[c]).test;
          curve.points[ri][c].nn_by_seed[si] = evaluate(
              [&pair](const Utterance& u) { return nn_predict(pair.nn, u); },
              test);
          curve.points[ri][c].nb_by_seed[si] = evaluate(
              [&pair](const Utterance& u) { return nb_predict(pair.nb, u); },
              test);
        }
      });
    }
  }
  run_tasks(tasks, config.threads);
  for (auto& row : curve.points) {
    for (auto& cell : row) fill_means(cell);
  }
  return curve;
}

namespace {

constexpr const char* kCsvHeader =
    "experiment,train_config,test_language,classifier,seed,ratio,accuracy\n";

void csv_rows(std::string& out, const std::string& experiment,
              const std::string& train_config, const std::string& test_lang,
              const std::string& ratio, const std::vector<std::uint64_t>& seeds,
              const MatrixCell& cell) {
  const std::pair<const char*, const std::vector<double>*> series[] = {
      {"nn", &cell.nn_by_seed}, {"nb", &cell.nb_by_seed}};
  for (const auto& [classifier, values_ptr] : series) {
    const auto& values = *values_ptr;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      out += experiment;
      out += ',';
      out += train_config;
      out += ',';
      out += test_lang;
      out += ',';
      out += classifier;
      out += ',';
      out += std::to_string(seeds[si]);
      out += ',';
      out += ratio;
      out += ',';
      out += fmt_full(values[si]);
      out += '\n';
    }
  }
}

std::string cell_markdown(const MatrixCell& cell, bool blind) {
  std::string body =
      fmt_one_decimal(cell.nn_mean) + "(" + fmt_one_decimal(cell.nb_mean) + ")";
  return blind ? "**" + body + "**" : body;
}

std::string markdown_grid(const std::string& corner,
                          const std::vector<std::string>& cols,
                          const std::vector<std::string>& rows,
                          const std::function<std::string(std::size_t,
                                                          std::size_t)>& cell) {
  std::string out = "| " + corner + " |";
  for (const auto& c : cols) out += " " + c + " |";
  out += "\n|";
  for (std::size_t c = 0; c <= cols.size(); ++c) out += " --- |";
  out += "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += "| " + rows[r] + " |";
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out += " " + cell(r, c) + " |";
    }
    out += "\n";
  }
  return out;
}

}  // namespace

std::string emit_report(const EvalMatrix& matrix, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    std::string out = kCsvHeader;
    for (std::size_t r = 0; r < matrix.row_labels.size(); ++r) {
      for (std::size_t c = 0; c < matrix.col_labels.size(); ++c) {
        csv_rows(out, matrix.experiment, matrix.row_labels[r],
                 matrix.col_labels[c], "", matrix.seeds, matrix.cells[r][c]);
      }
    }
    return out;
  }
  return markdown_grid(
      "train\\test", matrix.col_labels, matrix.row_labels,
      [&matrix](std::size_t r, std::size_t c) {
        return cell_markdown(matrix.cells[r][c], matrix.blind[r][c]);
      });
}

std::string emit_report(const InjectionCurve& curve, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    std::string out = kCsvHeader;
    std::string label = join(curve.train_languages, '+');
    for (std::size_t ri = 0; ri < curve.ratios.size(); ++ri) {
      for (std::size_t c = 0; c < curve.eval_languages.size(); ++c) {
        csv_rows(out, "injection", label, curve.eval_languages[c],
                 fmt_full(curve.ratios[ri]), curve.seeds,
                 curve.points[ri][c]);
      }
    }
    return out;
  }
  std::vector<std::string> row_labels;
  for (double r : curve.ratios) row_labels.push_back(fmt_full(r));
  return markdown_grid(
      "ratio", curve.eval_languages, row_labels,
      [&curve](std::size_t r, std::size_t c) {
        bool blind = curve.eval_languages[c] == curve.blind_language;
        return cell_markdown(curve.points[r][c], blind);
      });
}

}  // namespace phintent
