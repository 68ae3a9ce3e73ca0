#pragma once

// Synthetic multilingual phoneme-corpus generator. Each intent owns a bank
// of motif sequences over a shared base inventory; each language applies a
// per-phone substitution map that keeps a phone fixed with probability
// `overlap` and otherwise sends it through a language-specific permutation.
// The overlap knob controls how much signal survives across languages, so
// cross-lingual transfer can be dialed from none (0) to total (1).

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "phintent/corpus.hpp"
#include "phintent/rng.hpp"

namespace phintent {

struct FamilySpec {
  int num_languages = 4;
  int inventory_size = 60;  // V, excluding PAD
  int num_intents = 6;
  int motifs_per_intent = 2;
  int motif_length = 8;
  int min_utterance_length = 20;
  int max_utterance_length = 60;
  double overlap = 0.6;      // theta in [0,1]
  double noise_rate = 0.05;  // in [0,1)
  int utterances_per_cell = 120;
  std::string family_name = "custom";

  void validate() const;  // throws InvalidSpec
};

struct InvalidSpec : std::runtime_error {
  InvalidSpec(const std::string& field_name, const std::string& why)
      : std::runtime_error("invalid family spec, field " + field_name + ": " +
                           why),
        field(field_name) {}
  std::string field;
};

struct UnknownPreset : std::runtime_error {
  explicit UnknownPreset(const std::string& name)
      : std::runtime_error("unknown preset: " + name), preset(name) {}
  std::string preset;
};

// Per-intent motif sequences over base-inventory indices; motifs are
// pairwise distinct across the whole bank.
struct MotifBank {
  std::vector<std::vector<std::vector<int>>> motifs;  // [intent][m][pos]
};

struct FamilyData {
  std::map<std::string, Corpus> corpora;  // language tag -> corpus
  MotifBank motifs;
  // Per language: substitution over phone indices, entry 0 fixed at 0.
  std::map<std::string, std::vector<int>> substitutions;
};

// Substitution map over [0, inventory_size]: index v maps to itself with
// probability `overlap`, else to a per-call random permutation image.
std::vector<int> draw_substitution_map(int inventory_size, double overlap,
                                       Rng& rng);

// Full generation, exposing the internals the corpora were built from.
FamilyData generate_family_full(const FamilySpec& spec, std::uint64_t seed);

// Corpora only. Every (language, intent) cell holds exactly
// spec.utterances_per_cell utterances; all corpora share one inventory and
// one label set; output is a pure function of (spec, seed).
std::map<std::string, Corpus> generate_family(const FamilySpec& spec,
                                              std::uint64_t seed);

// Named presets: "indic-like" (6 intents, overlap 0.6) and "romance-like"
// (7 intents, overlap 0.45).
FamilySpec family_preset(const std::string& name);

// Concatenates per-language corpora (sorted by tag) into one corpus.
Corpus merge_family(const std::map<std::string, Corpus>& corpora);

}  // namespace phintent
