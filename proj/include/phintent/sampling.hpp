#pragma once

// Deterministic corpus sampling: stratified train/test splitting,
// equal-budget multilingual training-set composition, and nested
// blind-language injection. All three are pure functions of their inputs
// and a seed.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "phintent/corpus.hpp"

namespace phintent {

struct SplitSpec {
  double test_fraction = 0.2;  // in (0,1)
  std::uint64_t seed = 1;
};

// Training languages T with a total utterance budget B, divided equally.
struct MultilingualSpec {
  std::vector<std::string> train_languages;  // distinct, non-empty
  std::size_t budget = 0;                    // B >= |T|
};

struct InjectionSchedule {
  std::string blind_language;
  std::vector<double> ratios;  // strictly ascending, each in [0,1]
};

struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CellTooSmall : SamplingError {
  CellTooSmall(const std::string& lang, const std::string& intent)
      : SamplingError("split cell too small: (" + lang + ", " + intent + ")"),
        language(lang),
        intent(intent) {}
  std::string language, intent;
};

struct InsufficientData : SamplingError {
  explicit InsufficientData(const std::string& lang)
      : SamplingError("insufficient training data for language: " + lang),
        language(lang) {}
  std::string language;
};

struct InsufficientBlindData : SamplingError {
  InsufficientBlindData()
      : SamplingError("blind pool smaller than the requested injection") {}
};

struct LanguageCollision : SamplingError {
  explicit LanguageCollision(const std::string& lang)
      : SamplingError("blind pool language already in training set: " + lang),
        language(lang) {}
  std::string language;
};

// ceil(fraction * n) with a small epsilon so that values like 0.2 * 50,
// which land a hair above the intended integer in binary, do not round up.
std::size_t ceil_fraction(double fraction, std::size_t n);

struct SplitResult {
  Corpus train;
  Corpus test;
};

// Stratified by (language, intent): every cell contributes
// ceil(test_fraction * cell) test items. Requires >= 2 utterances per cell.
// Membership is deterministic given the seed; both sides keep corpus order.
SplitResult split(const Corpus& corpus, const SplitSpec& spec);

// Samples floor(B/n) utterances per training language, uniformly without
// replacement; languages are processed in sorted order.
Corpus compose_multilingual_train(const Corpus& pool,
                                  const MultilingualSpec& spec,
                                  std::uint64_t seed);

// Same operation over per-language corpora sharing one inventory/label set.
Corpus compose_multilingual_train(const std::map<std::string, Corpus>& sources,
                                  const MultilingualSpec& spec,
                                  std::uint64_t seed);

// Appends ceil(ratio * |base|) blind-pool utterances to `base`. The pool is
// permuted once per (pool, seed) and truncated per ratio, so the injected
// sets are nested across ratios.
Corpus inject(const Corpus& base, const Corpus& blind_pool, double ratio,
              std::uint64_t seed);

}  // namespace phintent
