#include "phintent/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace phintent {

namespace {

std::string padded_number(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

int digits(int v) {
  int d = 1;
  while (v >= 10) {
    v /= 10;
    ++d;
  }
  return d;
}

}  // namespace

void FamilySpec::validate() const {
  if (num_languages < 2) throw InvalidSpec("num_languages", "must be >= 2");
  if (inventory_size < 8) throw InvalidSpec("inventory_size", "must be >= 8");
  if (num_intents < 2) throw InvalidSpec("num_intents", "must be >= 2");
  if (motifs_per_intent < 1) {
    throw InvalidSpec("motifs_per_intent", "must be >= 1");
  }
  if (motif_length < 2) throw InvalidSpec("motif_length", "must be >= 2");
  if (min_utterance_length > max_utterance_length) {
    throw InvalidSpec("min_utterance_length", "must be <= max");
  }
  if (motif_length > min_utterance_length) {
    throw InvalidSpec("motif_length", "must be <= min utterance length");
  }
  if (!(overlap >= 0.0 && overlap <= 1.0)) {
    throw InvalidSpec("overlap", "must be in [0,1]");
  }
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) {
    throw InvalidSpec("noise_rate", "must be in [0,1)");
  }
  if (utterances_per_cell < 2) {
    throw InvalidSpec("utterances_per_cell", "must be >= 2");
  }
  if (family_name.empty()) throw InvalidSpec("family_name", "must be non-empty");
}

std::vector<int> draw_substitution_map(int inventory_size, double overlap,
                                       Rng& rng) {
  std::vector<std::size_t> perm = rng.permutation(inventory_size);
  std::vector<int> sigma(inventory_size + 1);
  sigma[0] = 0;
  for (int v = 1; v <= inventory_size; ++v) {
    bool keep = rng.next_real() < overlap;
    sigma[v] = keep ? v : static_cast<int>(perm[v - 1]) + 1;
  }
  return sigma;
}

FamilyData generate_family_full(const FamilySpec& spec, std::uint64_t seed) {
  spec.validate();
  const int V = spec.inventory_size;

  Rng rng(derive_seed(seed, "family"));

  // Shared inventory and label set.
  PhoneInventory inventory;
  int sym_width = digits(V);
  for (int v = 1; v <= V; ++v) {
    inventory.add("p" + padded_number(v, sym_width));
  }
  IntentLabelSet labels;
  int intent_width = digits(spec.num_intents);
  for (int c = 1; c <= spec.num_intents; ++c) {
    labels.intern("intent" + padded_number(c, intent_width));
  }
  std::vector<std::string> language_tags;
  int lang_width = digits(spec.num_languages);
  for (int l = 1; l <= spec.num_languages; ++l) {
    language_tags.push_back("lang" + padded_number(l, lang_width));
  }

  // Motif bank, distinct across the whole family.
  double space = std::pow(static_cast<double>(V), spec.motif_length);
  double needed =
      static_cast<double>(spec.num_intents) * spec.motifs_per_intent;
  if (space < 2.0 * needed) {
    throw InvalidSpec("motif_length", "motif space too small for distinct motifs");
  }
  FamilyData out;
  out.motifs.motifs.resize(spec.num_intents);
  std::set<std::vector<int>> seen;
  for (int c = 0; c < spec.num_intents; ++c) {
    while (static_cast<int>(out.motifs.motifs[c].size()) <
           spec.motifs_per_intent) {
      std::vector<int> m(spec.motif_length);
      for (int& p : m) p = 1 + static_cast<int>(rng.next_index(V));
      if (seen.insert(m).second) out.motifs.motifs[c].push_back(std::move(m));
    }
  }

  // Per-language substitution maps, drawn in tag order.
  for (const auto& tag : language_tags) {
    out.substitutions[tag] = draw_substitution_map(V, spec.overlap, rng);
  }

  // Utterances: filler + one planted motif, substituted, then noised.
  int span = spec.max_utterance_length - spec.min_utterance_length + 1;
  for (const auto& tag : language_tags) {
    const auto& sigma = out.substitutions[tag];
    Corpus corpus;
    corpus.inventory = inventory;
    corpus.labels = labels;
    for (int c = 0; c < spec.num_intents; ++c) {
      for (int i = 0; i < spec.utterances_per_cell; ++i) {
        int len = spec.min_utterance_length +
                  static_cast<int>(rng.next_index(span));
        Utterance u;
        u.language = tag;
        u.intent = c;
        u.phones.resize(len);
        for (int& p : u.phones) p = 1 + static_cast<int>(rng.next_index(V));
        const auto& motif =
            out.motifs.motifs[c][rng.next_index(spec.motifs_per_intent)];
        int pos = static_cast<int>(
            rng.next_index(len - spec.motif_length + 1));
        std::copy(motif.begin(), motif.end(), u.phones.begin() + pos);
        for (int& p : u.phones) p = sigma[p];
        for (int& p : u.phones) {
          if (rng.next_real() < spec.noise_rate) {
            p = 1 + static_cast<int>(rng.next_index(V));
          }
        }
        corpus.utterances.push_back(std::move(u));
      }
    }
    out.corpora.emplace(tag, std::move(corpus));
  }
  return out;
}

std::map<std::string, Corpus> generate_family(const FamilySpec& spec,
                                              std::uint64_t seed) {
  return generate_family_full(spec, seed).corpora;
}

FamilySpec family_preset(const std::string& name) {
  FamilySpec spec;
  spec.num_languages = 4;
  spec.inventory_size = 60;
  spec.motifs_per_intent = 1;
  spec.motif_length = 10;
  spec.min_utterance_length = 20;
  spec.max_utterance_length = 60;
  spec.noise_rate = 0.05;
  spec.utterances_per_cell = 120;
  spec.family_name = name;
  if (name == "indic-like") {
    spec.num_intents = 6;
    spec.overlap = 0.6;
  } else if (name == "romance-like") {
    spec.num_intents = 7;
    spec.overlap = 0.45;
  } else {
    throw UnknownPreset(name);
  }
  return spec;
}

Corpus merge_family(const std::map<std::string, Corpus>& corpora) {
  Corpus merged;
  bool first = true;
  for (const auto& [tag, corpus] : corpora) {
    if (first) {
      merged.inventory = corpus.inventory;
      merged.labels = corpus.labels;
      first = false;
    } else if (!(merged.inventory == corpus.inventory) ||
               !(merged.labels == corpus.labels)) {
      throw std::invalid_argument(
          "family corpora must share one inventory and label set");
    }
    merged.utterances.insert(merged.utterances.end(),
                             corpus.utterances.begin(),
                             corpus.utterances.end());
  }
  return merged;
}

}  // namespace phintent
