#include "phintent/naive_bayes.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace phintent {

void NBConfig::validate() const {
  if (ngram_order < 1) throw std::invalid_argument("ngram_order must be >= 1");
  if (smoothing == Smoothing::kAbsoluteDiscount &&
      !(delta > 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("delta must be in (0,1]");
  }
}

std::uint64_t encode_ngram(std::span<const int> phones, int inventory_size) {
  std::uint64_t key = 0;
  std::uint64_t radix = static_cast<std::uint64_t>(inventory_size);
  std::uint64_t scale = 1;
  for (int p : phones) {
    key += static_cast<std::uint64_t>(p) * scale;
    scale *= radix;
  }
  return key;
}

double NBModel::ngram_space() const {
  return std::pow(static_cast<double>(inventory_size - 1),
                  static_cast<double>(config.ngram_order));
}

NBModel train_nb(const Corpus& train, const NBConfig& config) {
  config.validate();
  if (train.utterances.empty()) throw EmptyCorpus();

  int inv = train.inventory.size();
  // Guard the packed-key radix: inv^n must fit in 64 bits.
  std::uint64_t space = 1;
  for (int j = 0; j < config.ngram_order; ++j) {
    if (space > std::numeric_limits<std::uint64_t>::max() /
                    static_cast<std::uint64_t>(inv)) {
      throw std::invalid_argument("ngram_order too large for this inventory");
    }
    space *= static_cast<std::uint64_t>(inv);
  }

  NBModel model;
  model.config = config;
  model.inventory_size = inv;
  int num_intents = train.labels.size();
  model.classes.resize(num_intents);

  std::vector<std::uint64_t> class_counts(num_intents, 0);
  const int n = config.ngram_order;
  for (const auto& u : train.utterances) {
    class_counts[u.intent] += 1;
    auto& stats = model.classes[u.intent];
    if (static_cast<int>(u.phones.size()) >= n) {
      for (std::size_t i = 0; i + n <= u.phones.size(); ++i) {
        std::uint64_t key =
            encode_ngram(std::span(u.phones).subspan(i, n), inv);
        stats.counts[key] += 1;
        stats.total += 1;
      }
    }
  }

  model.log_priors.resize(num_intents);
  double total = static_cast<double>(train.utterances.size());
  for (int c = 0; c < num_intents; ++c) {
    if (class_counts[c] == 0) throw EmptyClass(train.labels.label(c));
    model.log_priors[c] = std::log(static_cast<double>(class_counts[c]) / total);
  }
  return model;
}

double ngram_probability(const NBModel& model, int intent, std::uint64_t key) {
  const auto& stats = model.classes.at(intent);
  auto it = stats.counts.find(key);
  double count = it == stats.counts.end() ? 0.0
                                          : static_cast<double>(it->second);
  double vn = model.ngram_space();
  double nc = static_cast<double>(stats.total);
  switch (model.config.smoothing) {
    case Smoothing::kAddOne:
      return (count + 1.0) / (nc + vn);
    case Smoothing::kAbsoluteDiscount: {
      if (stats.total == 0) return 1.0 / vn;  // no mass to discount
      double delta = model.config.delta;
      double discounted = std::max(count - delta, 0.0) / nc;
      double backoff =
          (delta * static_cast<double>(stats.distinct()) / nc) * (1.0 / vn);
      return discounted + backoff;
    }
  }
  return 0.0;  // unreachable
}

std::vector<double> nb_log_posterior(const NBModel& model, const Utterance& u) {
  for (int p : u.phones) {
    if (p <= 0 || p >= model.inventory_size) throw UnknownPhone(p);
  }
  const int n = model.config.ngram_order;

  // Sorted bag of the utterance's n-grams; ordered iteration keeps the
  // log-sum bit-exactly independent of phone order.
  std::map<std::uint64_t, int> bag;
  if (static_cast<int>(u.phones.size()) >= n) {
    for (std::size_t i = 0; i + n <= u.phones.size(); ++i) {
      bag[encode_ngram(std::span(u.phones).subspan(i, n),
                       model.inventory_size)] += 1;
    }
  }

  std::vector<double> scores(model.log_priors);
  for (int c = 0; c < model.num_intents(); ++c) {
    for (const auto& [key, count] : bag) {
      scores[c] += count * std::log(ngram_probability(model, c, key));
    }
  }
  return scores;
}

int nb_predict(const NBModel& model, const Utterance& u) {
  auto scores = nb_log_posterior(model, u);
  int best = 0;
  for (int c = 1; c < static_cast<int>(scores.size()); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

}  // namespace phintent
