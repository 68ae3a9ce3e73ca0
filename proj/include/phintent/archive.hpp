#pragma once

// Model persistence. An archive is one self-describing JSON file holding
// the classifier kind, the inventory (symbols stored sorted, with the
// model-index remap), the label set, the configuration, and every
// parameter as a losslessly round-tripping 64-bit value. load(save(m))
// predicts bit-identically to m.

#include <optional>
#include <stdexcept>
#include <string>

#include "phintent/corpus.hpp"
#include "phintent/naive_bayes.hpp"
#include "phintent/network.hpp"

namespace phintent {

inline constexpr int kArchiveVersion = 1;

struct VersionMismatch : std::runtime_error {
  explicit VersionMismatch(int got)
      : std::runtime_error("unsupported archive version: " +
                           std::to_string(got)),
        version(got) {}
  int version;
};

struct CorruptArchive : std::runtime_error {
  explicit CorruptArchive(const std::string& why)
      : std::runtime_error("corrupt archive: " + why) {}
};

struct VocabularyMismatch : std::runtime_error {
  explicit VocabularyMismatch(const std::string& sym)
      : std::runtime_error("symbol not in model vocabulary: " + sym),
        symbol(sym) {}
  std::string symbol;
};

struct LoadedModel {
  std::string kind;  // "nb" | "nn"
  PhoneInventory inventory;  // reconstructed in model index order
  IntentLabelSet labels;
  std::optional<NBModel> nb;
  std::optional<NNModel> nn;

  // Predicts an utterance already expressed in model indices.
  int predict(const Utterance& u) const;
};

void save_model(const std::string& path, const NBModel& model,
                const PhoneInventory& inventory, const IntentLabelSet& labels);
void save_model(const std::string& path, const NNModel& model,
                const PhoneInventory& inventory, const IntentLabelSet& labels);

LoadedModel load_model(const std::string& path);

// Translates phone indices from a source inventory into model indices by
// symbol; throws VocabularyMismatch naming the first unknown symbol.
std::vector<int> map_phones(const PhoneInventory& model_inventory,
                            const PhoneInventory& source_inventory,
                            const std::vector<int>& phones);

}  // namespace phintent
