#include "phintent/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "phintent/rng.hpp"

namespace phintent {

std::size_t ceil_fraction(double fraction, std::size_t n) {
  double raw = fraction * static_cast<double>(n);
  double k = std::ceil(raw - 1e-9);
  if (k < 0) k = 0;
  return static_cast<std::size_t>(k);
}

SplitResult split(const Corpus& corpus, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw std::invalid_argument("test_fraction must be in (0,1)");
  }

  // Cells keyed by (language, intent index); map order fixes the iteration
  // order, which the determinism contract depends on.
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    const auto& u = corpus.utterances[i];
    cells[{u.language, u.intent}].push_back(i);
  }

  Rng rng(spec.seed);
  std::vector<char> is_test(corpus.utterances.size(), 0);
  for (auto& [key, idx] : cells) {
    if (idx.size() < 2) {
      throw CellTooSmall(key.first, corpus.labels.label(key.second));
    }
    rng.shuffle(idx);
    std::size_t n_test = ceil_fraction(spec.test_fraction, idx.size());
    for (std::size_t j = 0; j < n_test; ++j) is_test[idx[j]] = 1;
  }

  std::vector<Utterance> train, test;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    (is_test[i] ? test : train).push_back(corpus.utterances[i]);
  }
  return {with_utterances(corpus, std::move(train)),
          with_utterances(corpus, std::move(test))};
}

Corpus compose_multilingual_train(const Corpus& pool,
                                  const MultilingualSpec& spec,
                                  std::uint64_t seed) {
  if (spec.train_languages.empty()) {
    throw std::invalid_argument("train_languages must be non-empty");
  }
  std::set<std::string> langs(spec.train_languages.begin(),
                              spec.train_languages.end());
  if (langs.size() != spec.train_languages.size()) {
    throw std::invalid_argument("duplicate language in train_languages");
  }
  std::size_t n = langs.size();
  if (spec.budget < n) {
    throw std::invalid_argument("budget must be at least |train_languages|");
  }
  std::size_t per_language = spec.budget / n;

  std::map<std::string, std::vector<std::size_t>> by_language;
  for (std::size_t i = 0; i < pool.utterances.size(); ++i) {
    by_language[pool.utterances[i].language].push_back(i);
  }

  Rng rng(seed);
  std::vector<Utterance> picked;
  picked.reserve(per_language * n);
  for (const auto& lang : langs) {  // sorted
    auto it = by_language.find(lang);
    std::size_t available = it == by_language.end() ? 0 : it->second.size();
    if (available < per_language) throw InsufficientData(lang);
    auto chosen = rng.sample_without_replacement(available, per_language);
    std::sort(chosen.begin(), chosen.end());
    for (auto c : chosen) picked.push_back(pool.utterances[it->second[c]]);
  }
  return with_utterances(pool, std::move(picked));
}

Corpus compose_multilingual_train(const std::map<std::string, Corpus>& sources,
                                  const MultilingualSpec& spec,
                                  std::uint64_t seed) {
  Corpus pool;
  bool first = true;
  for (const auto& [lang, corpus] : sources) {
    if (first) {
      pool.inventory = corpus.inventory;
      pool.labels = corpus.labels;
      first = false;
    } else if (!(pool.inventory == corpus.inventory) ||
               !(pool.labels == corpus.labels)) {
      throw std::invalid_argument(
          "source corpora must share one inventory and label set");
    }
    pool.utterances.insert(pool.utterances.end(), corpus.utterances.begin(),
                           corpus.utterances.end());
  }
  return compose_multilingual_train(pool, spec, seed);
}

Corpus inject(const Corpus& base, const Corpus& blind_pool, double ratio,
              std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("ratio must be in [0,1]");
  }
  if (!(base.inventory == blind_pool.inventory) ||
      !(base.labels == blind_pool.labels)) {
    throw std::invalid_argument(
        "base and blind pool must share one inventory and label set");
  }
  std::set<std::string> base_langs;
  for (const auto& u : base.utterances) base_langs.insert(u.language);
  for (const auto& u : blind_pool.utterances) {
    if (base_langs.count(u.language)) throw LanguageCollision(u.language);
  }
  std::size_t k = ceil_fraction(ratio, base.utterances.size());
  if (blind_pool.utterances.size() < k) throw InsufficientBlindData();

  // One permutation per (pool, seed); ratios only truncate it, so smaller
  // ratios pick a prefix of larger ones.
  Rng rng(seed);
  auto perm = rng.permutation(blind_pool.utterances.size());

  std::vector<Utterance> out = base.utterances;
  out.reserve(out.size() + k);
  for (std::size_t j = 0; j < k; ++j) {
    out.push_back(blind_pool.utterances[perm[j]]);
  }
  return with_utterances(base, std::move(out));
}

}  // namespace phintent
