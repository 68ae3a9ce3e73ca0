#pragma once

// Experiment protocols: monolingual cross-lingual matrices, multilingual
// leave-languages-out matrices, and blind-language injection curves. Both
// classifiers run behind one train/predict interface on identical splits;
// every cell is reproducible from (corpus seed, split seed, train seed).

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phintent/corpus.hpp"
#include "phintent/naive_bayes.hpp"
#include "phintent/network.hpp"
#include "phintent/sampling.hpp"

namespace phintent {

struct SplitPair {
  Corpus train;
  Corpus test;
};

// Stratified split of a multilingual corpus, then partitioned per language.
// All pairs share the corpus's inventory and label set.
std::map<std::string, SplitPair> split_by_language(const Corpus& merged,
                                                   const SplitSpec& spec);

// Accuracy percent of a predictor over a test corpus.
double evaluate(const std::function<int(const Utterance&)>& predict,
                const Corpus& test);

struct ExperimentConfig {
  NBConfig nb;
  NNConfig nn;       // dims template; vocab/intents are filled per corpus
  TrainHyper hyper;  // seed is overridden per run
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int threads = 1;   // independent (row, seed) runs may execute concurrently
};

// Per-cell accuracies: one value per seed for each classifier, plus means.
struct MatrixCell {
  std::vector<double> nn_by_seed;
  std::vector<double> nb_by_seed;
  double nn_mean = 0.0;
  double nb_mean = 0.0;
};

struct EvalMatrix {
  std::string experiment;  // "monolingual" | "multilingual"
  std::string corpus_id;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> row_labels;  // training configurations
  std::vector<std::string> col_labels;  // test languages
  std::vector<std::vector<MatrixCell>> cells;  // [row][col]
  std::vector<std::vector<bool>> blind;        // [row][col]
};

// Rows = training languages; cols = test languages. Repeated per seed (the
// seed drives network init/shuffling) and averaged.
EvalMatrix monolingual_matrix(const std::map<std::string, SplitPair>& splits,
                              const ExperimentConfig& config);

// Rows = every size-n subset of the languages, trained on an equal-budget
// mixture; columns not in the subset are flagged blind. The budget defaults
// to the smallest per-language training split.
EvalMatrix multilingual_matrix(const std::map<std::string, SplitPair>& splits,
                               int subset_size,
                               std::optional<std::size_t> budget,
                               const ExperimentConfig& config);

struct InjectionCurve {
  std::string corpus_id;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> train_languages;
  std::string blind_language;
  std::vector<double> ratios;
  std::vector<std::string> eval_languages;     // sorted, includes blind
  std::vector<std::vector<MatrixCell>> points; // [ratio][eval_language]
};

// For each ratio r: the equal-budget training mixture over T plus
// ceil(r * |mixture|) blind-language utterances (nested across ratios),
// trained and evaluated on every language in T plus the blind language.
// The r = 0 point coincides with the multilingual cell for (T, blind) at
// the same seeds.
InjectionCurve injection_curve(const std::map<std::string, SplitPair>& splits,
                               const std::vector<std::string>& train_languages,
                               const InjectionSchedule& schedule,
                               std::optional<std::size_t> budget,
                               const ExperimentConfig& config);

enum class ReportFormat { kCsv, kMarkdown };

// CSV: one row per (train_config, test_language, classifier, seed) with an
// empty ratio column for matrices. Markdown: a grid of "NN(NB)" cells to
// one decimal, blind cells bolded. Both are byte-deterministic.
std::string emit_report(const EvalMatrix& matrix, ReportFormat format);
std::string emit_report(const InjectionCurve& curve, ReportFormat format);

}  // namespace phintent
