#pragma once

// Naive Bayes over bags of phone n-grams, with add-1 (Laplace) smoothing or
// absolute discounting interpolated with the uniform distribution over the
// full n-gram space.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "phintent/corpus.hpp"

namespace phintent {

enum class Smoothing { kAddOne, kAbsoluteDiscount };

struct NBConfig {
  int ngram_order = 1;                                // n >= 1
  Smoothing smoothing = Smoothing::kAbsoluteDiscount;
  double delta = 0.5;  // in (0,1]; AbsoluteDiscount only

  void validate() const;  // throws std::invalid_argument
};

// Packs an n-gram of inventory indices into one integer key,
// least-significant position first, radix = inventory size (incl. PAD).
std::uint64_t encode_ngram(std::span<const int> phones, int inventory_size);

struct NBClassStats {
  std::unordered_map<std::uint64_t, std::uint64_t> counts;
  std::uint64_t total = 0;                    // N_c
  std::size_t distinct() const { return counts.size(); }  // S_c
};

struct NBModel {
  NBConfig config;
  int inventory_size = 0;  // including PAD
  std::vector<double> log_priors;
  std::vector<NBClassStats> classes;

  int num_intents() const { return static_cast<int>(log_priors.size()); }

  // Number of possible n-grams, (inventory_size - 1)^n; PAD excluded.
  double ngram_space() const;
};

NBModel train_nb(const Corpus& train, const NBConfig& config);

// Smoothed P(g | c) for an encoded n-gram key.
double ngram_probability(const NBModel& model, int intent, std::uint64_t key);

// log prior(c) + sum over the utterance's n-grams of log P(g|c). The
// n-grams are aggregated into a sorted bag first, so the result is exactly
// invariant under permutation of the n-grams within the utterance.
std::vector<double> nb_log_posterior(const NBModel& model, const Utterance& u);

// Argmax of nb_log_posterior; ties break toward the lowest intent index.
int nb_predict(const NBModel& model, const Utterance& u);

}  // namespace phintent
