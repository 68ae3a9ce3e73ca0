#include "phintent/archive.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "phintent/manifest.hpp"

namespace phintent {

using nlohmann::json;

namespace {

// Sorted non-PAD symbols plus the remap back to model indices, so corpora
// with the same symbol set produce interchangeable archives regardless of
// ingestion order.
json inventory_to_json(const PhoneInventory& inventory) {
  std::vector<std::pair<std::string, int>> entries;
  for (int i = 1; i < inventory.size(); ++i) {
    entries.emplace_back(inventory.symbol(i), i);
  }
  std::sort(entries.begin(), entries.end());
  json symbols = json::array();
  json indices = json::array();
  for (const auto& [sym, idx] : entries) {
    symbols.push_back(sym);
    indices.push_back(idx);
  }
  return json{{"symbols_sorted", symbols}, {"model_index", indices}};
}

PhoneInventory inventory_from_json(const json& j) {
  const auto& symbols = j.at("symbols_sorted");
  const auto& indices = j.at("model_index");
  if (symbols.size() != indices.size()) {
    throw CorruptArchive("inventory arrays disagree in length");
  }
  std::vector<std::string> ordered(symbols.size());
  std::vector<bool> seen(symbols.size(), false);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    int idx = indices[i].get<int>();
    if (idx < 1 || idx > static_cast<int>(symbols.size()) || seen[idx - 1]) {
      throw CorruptArchive("model_index is not a permutation");
    }
    seen[idx - 1] = true;
    ordered[idx - 1] = symbols[i].get<std::string>();
  }
  return build_inventory(ordered);
}

json labels_to_json(const IntentLabelSet& labels) {
  json out = json::array();
  for (const auto& l : labels.labels()) out.push_back(l);
  return out;
}

IntentLabelSet labels_from_json(const json& j) {
  IntentLabelSet labels;
  for (const auto& l : j) labels.intern(l.get<std::string>());
  return labels;
}

json header(const std::string& kind) {
  return json{{"format", "phintent-model"},
              {"format_version", kArchiveVersion},
              {"tool_version", kToolVersion},
              {"kind", kind}};
}

void check_header(const json& j) {
  if (!j.is_object() || j.value("format", "") != "phintent-model") {
    throw CorruptArchive("not a model archive");
  }
  int version = j.value("format_version", -1);
  if (version != kArchiveVersion) throw VersionMismatch(version);
}

double finite_or_throw(double v) {
  if (!std::isfinite(v)) {
    throw CorruptArchive("non-finite parameter value");
  }
  return v;
}

}  // namespace

void save_model(const std::string& path, const NBModel& model,
                const PhoneInventory& inventory,
                const IntentLabelSet& labels) {
  json j = header("nb");
  j["inventory"] = inventory_to_json(inventory);
  j["labels"] = labels_to_json(labels);
  j["config"] = {
      {"ngram_order", model.config.ngram_order},
      {"smoothing",
       model.config.smoothing == Smoothing::kAddOne ? "add1" : "absdisc"},
      {"delta", model.config.delta}};

  json classes = json::array();
  for (const auto& stats : model.classes) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> counts(
        stats.counts.begin(), stats.counts.end());
    std::sort(counts.begin(), counts.end());
    json rows = json::array();
    for (const auto& [key, count] : counts) {
      rows.push_back(json::array({key, count}));
    }
    classes.push_back(json{{"total", stats.total}, {"counts", rows}});
  }
  json priors = json::array();
  for (double p : model.log_priors) priors.push_back(finite_or_throw(p));
  j["params"] = json{{"inventory_size", model.inventory_size},
                     {"log_priors", priors},
                     {"classes", classes}};
  write_file_atomic(path, j.dump() + "\n");
}

void save_model(const std::string& path, const NNModel& model,
                const PhoneInventory& inventory,
                const IntentLabelSet& labels) {
  json j = header("nn");
  j["inventory"] = inventory_to_json(inventory);
  j["labels"] = labels_to_json(labels);
  j["config"] = {{"vocab_size", model.config.vocab_size},
                 {"embed_dim", model.config.embed_dim},
                 {"conv_channels", model.config.conv_channels},
                 {"kernel_sizes", model.config.kernel_sizes},
                 {"lstm_hidden", model.config.lstm_hidden},
                 {"num_intents", model.config.num_intents}};

  json tensors = json::array();
  for (const auto& t : model_tensors(model)) {
    json data = json::array();
    for (std::ptrdiff_t i = 0; i < t.size; ++i) {
      data.push_back(finite_or_throw(t.data[i]));
    }
    tensors.push_back(json{{"name", t.name},
                           {"rows", t.rows},
                           {"cols", t.cols},
                           {"data", std::move(data)}});  // column-major
  }
  j["params"] = json{{"tensors", std::move(tensors)}};
  write_file_atomic(path, j.dump() + "\n");
}

LoadedModel load_model(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptArchive(e.what());
  }
  check_header(j);

  LoadedModel loaded;
  try {
    loaded.kind = j.at("kind").get<std::string>();
    loaded.inventory = inventory_from_json(j.at("inventory"));
    loaded.labels = labels_from_json(j.at("labels"));
    const json& config = j.at("config");
    const json& params = j.at("params");

    if (loaded.kind == "nb") {
      NBModel model;
      model.config.ngram_order = config.at("ngram_order").get<int>();
      std::string smoothing = config.at("smoothing").get<std::string>();
      if (smoothing == "add1") {
        model.config.smoothing = Smoothing::kAddOne;
      } else if (smoothing == "absdisc") {
        model.config.smoothing = Smoothing::kAbsoluteDiscount;
      } else {
        throw CorruptArchive("unknown smoothing: " + smoothing);
      }
      model.config.delta = config.at("delta").get<double>();
      model.inventory_size = params.at("inventory_size").get<int>();
      if (model.inventory_size != loaded.inventory.size()) {
        throw CorruptArchive("inventory size disagrees with symbol list");
      }
      for (const auto& p : params.at("log_priors")) {
        model.log_priors.push_back(p.get<double>());
      }
      if (static_cast<int>(model.log_priors.size()) != loaded.labels.size()) {
        throw CorruptArchive("prior count disagrees with label set");
      }
      for (const auto& cls : params.at("classes")) {
        NBClassStats stats;
        stats.total = cls.at("total").get<std::uint64_t>();
        for (const auto& row : cls.at("counts")) {
          stats.counts[row.at(0).get<std::uint64_t>()] =
              row.at(1).get<std::uint64_t>();
        }
        model.classes.push_back(std::move(stats));
      }
      if (model.classes.size() != model.log_priors.size()) {
        throw CorruptArchive("class table count disagrees with priors");
      }
      loaded.nb = std::move(model);
    } else if (loaded.kind == "nn") {
      NNConfig cfg;
      cfg.vocab_size = config.at("vocab_size").get<int>();
      cfg.embed_dim = config.at("embed_dim").get<int>();
      cfg.conv_channels = config.at("conv_channels").get<int>();
      cfg.kernel_sizes.clear();
      for (const auto& k : config.at("kernel_sizes")) {
        cfg.kernel_sizes.push_back(k.get<int>());
      }
      cfg.lstm_hidden = config.at("lstm_hidden").get<int>();
      cfg.num_intents = config.at("num_intents").get<int>();
      cfg.validate();
      if (cfg.vocab_size != loaded.inventory.size() ||
          cfg.num_intents != loaded.labels.size()) {
        throw CorruptArchive("config disagrees with inventory/labels");
      }

      NNModel model = zeros_like(cfg);
      auto refs = model_tensors(model);
      const auto& tensors = params.at("tensors");
      if (tensors.size() != refs.size()) {
        throw CorruptArchive("unexpected tensor count");
      }
      for (std::size_t i = 0; i < refs.size(); ++i) {
        const json& t = tensors[i];
        if (t.at("name").get<std::string>() != refs[i].name ||
            t.at("rows").get<int>() != refs[i].rows ||
            t.at("cols").get<int>() != refs[i].cols) {
          throw CorruptArchive("tensor name/shape mismatch: " + refs[i].name);
        }
        const auto& data = t.at("data");
        if (static_cast<std::ptrdiff_t>(data.size()) != refs[i].size) {
          throw CorruptArchive("tensor data length mismatch: " + refs[i].name);
        }
        for (std::ptrdiff_t k = 0; k < refs[i].size; ++k) {
          refs[i].data[k] = data[k].get<double>();
        }
      }
      loaded.nn = std::move(model);
    } else {
      throw CorruptArchive("unknown classifier kind: " + loaded.kind);
    }
  } catch (const VersionMismatch&) {
    throw;
  } catch (const CorruptArchive&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptArchive(e.what());
  }
  return loaded;
}

int LoadedModel::predict(const Utterance& u) const {
  if (nb) return nb_predict(*nb, u);
  if (nn) return nn_predict(*nn, u);
  throw CorruptArchive("loaded model holds no classifier");
}

std::vector<int> map_phones(const PhoneInventory& model_inventory,
                            const PhoneInventory& source_inventory,
                            const std::vector<int>& phones) {
  std::vector<int> mapped;
  mapped.reserve(phones.size());
  for (int p : phones) {
    const std::string& sym = source_inventory.symbol(p);
    int idx = model_inventory.index_of(sym);
    if (idx <= 0) throw VocabularyMismatch(sym);
    mapped.push_back(idx);
  }
  return mapped;
}

}  // namespace phintent
