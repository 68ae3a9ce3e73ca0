// Command-line harness: corpus generation, classifier training and
// evaluation, experiment matrices/curves, model persistence and gradient
// checking. Every command writes a manifest of its fully resolved options
// and accepts it back via --config, reproducing outputs byte-for-byte.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phintent/archive.hpp"
#include "phintent/corpus.hpp"
#include "phintent/experiments.hpp"
#include "phintent/manifest.hpp"
#include "phintent/naive_bayes.hpp"
#include "phintent/network.hpp"
#include "phintent/sampling.hpp"
#include "phintent/synthgen.hpp"

namespace {

using nlohmann::json;
using namespace phintent;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitMalformed = 4;
constexpr int kExitTraining = 5;
constexpr int kExitVocabulary = 6;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Converts validation failures of flag-derived values into usage errors.
template <typename Fn>
void validate_usage(Fn&& fn) {
  try {
    fn();
  } catch (const UnknownPreset&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::string fmt_one_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

// Applies manifest options underneath explicitly passed flags.
class ConfigOverlay {
 public:
  template <typename T>
  void bind(CLI::Option* opt, const std::string& key, T& target) {
    entries_.push_back({opt, key, [&target](const json& v) {
                          target = v.get<T>();
                        }});
  }

  void apply(const json& options) {
    for (const auto& e : entries_) {
      if (e.opt->count() == 0 && options.contains(e.key)) {
        e.apply(options.at(e.key));
      }
    }
  }

 private:
  struct Entry {
    CLI::Option* opt;
    std::string key;
    std::function<void(const json&)> apply;
  };
  std::vector<Entry> entries_;
};

json load_config_for(const std::string& command, const std::string& path) {
  json manifest;
  try {
    manifest = load_json_file(path);
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(std::string("bad --config file: ") + e.what());
  }
  if (manifest.value("command", "") != command) {
    throw UsageError("--config manifest is for command '" +
                     manifest.value("command", std::string("?")) + "'");
  }
  if (!manifest.contains("options") || !manifest["options"].is_object()) {
    throw UsageError("--config manifest has no options object");
  }
  return manifest["options"];
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);
}

std::vector<double> parse_ratios(const std::string& text) {
  std::vector<double> out;
  auto round9 = [](double v) { return std::round(v * 1e9) / 1e9; };
  try {
    if (text.find(':') != std::string::npos) {
      auto c1 = text.find(':');
      auto c2 = text.find(':', c1 + 1);
      if (c2 == std::string::npos) throw std::invalid_argument(text);
      double start = std::stod(text.substr(0, c1));
      double end = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
      double step = std::stod(text.substr(c2 + 1));
      if (step <= 0 || end < start) throw std::invalid_argument(text);
      int count = static_cast<int>(std::floor((end - start) / step + 1e-9)) + 1;
      for (int i = 0; i < count; ++i) out.push_back(round9(start + i * step));
    } else {
      std::size_t pos = 0;
      while (pos <= text.size()) {
        auto next = text.find(',', pos);
        out.push_back(round9(std::stod(text.substr(
            pos, next == std::string::npos ? std::string::npos : next - pos))));
        if (next == std::string::npos) break;
        pos = next + 1;
      }
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception&) {
    throw UsageError("cannot parse --ratios value: " + text);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 0.0 || out[i] > 1.0 || (i > 0 && out[i] <= out[i - 1])) {
      throw UsageError("ratios must be ascending within [0,1]");
    }
  }
  if (out.empty()) throw UsageError("empty --ratios");
  return out;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find(',', pos);
    std::string part = text.substr(
        pos, next == std::string::npos ? std::string::npos : next - pos);
    if (!part.empty()) out.push_back(part);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

// --- shared option bundles ---------------------------------------------------

struct SplitFlags {
  double test_fraction = 0.2;
  std::uint64_t split_seed = 1;

  void attach(CLI::App& cmd, ConfigOverlay& overlay) {
    auto* a = cmd.add_option("--test-fraction", test_fraction,
                             "Held-out fraction per (language,intent) cell");
    auto* b = cmd.add_option("--split-seed", split_seed,
                             "Seed for the stratified split");
    overlay.bind(a, "test-fraction", test_fraction);
    overlay.bind(b, "split-seed", split_seed);
  }
  json to_json() const {
    return {{"test-fraction", test_fraction}, {"split-seed", split_seed}};
  }
  SplitSpec spec() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
      throw UsageError("--test-fraction must be in (0,1)");
    }
    return {test_fraction, split_seed};
  }
};

struct NBFlags {
  int ngram = 1;
  std::string smoothing = "absdisc";
  double delta = 0.5;

  void attach(CLI::App& cmd, ConfigOverlay& overlay) {
    auto* a = cmd.add_option("--ngram", ngram, "N-gram order");
    auto* b = cmd.add_option("--smoothing", smoothing, "add1 | absdisc");
    auto* c = cmd.add_option("--delta", delta,
                             "Absolute-discounting delta in (0,1]");
    overlay.bind(a, "ngram", ngram);
    overlay.bind(b, "smoothing", smoothing);
    overlay.bind(c, "delta", delta);
  }
  json to_json() const {
    return {{"ngram", ngram}, {"smoothing", smoothing}, {"delta", delta}};
  }
  NBConfig config() const {
    NBConfig cfg;
    cfg.ngram_order = ngram;
    if (smoothing == "add1") {
      cfg.smoothing = Smoothing::kAddOne;
    } else if (smoothing == "absdisc") {
      cfg.smoothing = Smoothing::kAbsoluteDiscount;
    } else {
      throw UsageError("--smoothing must be add1 or absdisc");
    }
    cfg.delta = delta;
    validate_usage([&] { cfg.validate(); });
    return cfg;
  }
};

struct NNFlags {
  int embed = 128;
  int channels = 128;
  std::vector<int> kernels = {3, 5};
  int lstm = 128;
  double lr = 1e-3;
  int batch = 32;
  int epochs = 30;
  std::string optimizer = "adam";
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  bool no_shuffle = false;
  double stop_train_acc = -1.0;  // < 0 disables early stopping

  void attach(CLI::App& cmd, ConfigOverlay& overlay) {
    auto* a = cmd.add_option("--embed", embed, "Embedding dimension");
    auto* b = cmd.add_option("--channels", channels,
                             "Convolution channels per branch");
    auto* c = cmd.add_option("--kernels", kernels, "Kernel sizes (odd)")
                  ->delimiter(',');
    auto* d = cmd.add_option("--lstm", lstm, "LSTM hidden size");
    auto* e = cmd.add_option("--lr", lr, "Learning rate");
    auto* f = cmd.add_option("--batch", batch, "Mini-batch size");
    auto* g = cmd.add_option("--epochs", epochs, "Maximum training epochs");
    auto* h = cmd.add_option("--optimizer", optimizer, "adam | sgd");
    auto* i = cmd.add_option("--beta1", beta1, "Adam beta1");
    auto* j = cmd.add_option("--beta2", beta2, "Adam beta2");
    auto* k = cmd.add_option("--adam-eps", adam_eps, "Adam epsilon");
    auto* l = cmd.add_flag("--no-shuffle", no_shuffle,
                           "Disable per-epoch shuffling");
    auto* m = cmd.add_option(
        "--stop-train-acc", stop_train_acc,
        "Stop once training accuracy reaches this fraction (negative: off)");
    overlay.bind(a, "embed", embed);
    overlay.bind(b, "channels", channels);
    overlay.bind(c, "kernels", kernels);
    overlay.bind(d, "lstm", lstm);
    overlay.bind(e, "lr", lr);
    overlay.bind(f, "batch", batch);
    overlay.bind(g, "epochs", epochs);
    overlay.bind(h, "optimizer", optimizer);
    overlay.bind(i, "beta1", beta1);
    overlay.bind(j, "beta2", beta2);
    overlay.bind(k, "adam-eps", adam_eps);
    overlay.bind(l, "no-shuffle", no_shuffle);
    overlay.bind(m, "stop-train-acc", stop_train_acc);
  }
  json to_json() const {
    return {{"embed", embed},       {"channels", channels},
            {"kernels", kernels},   {"lstm", lstm},
            {"lr", lr},             {"batch", batch},
            {"epochs", epochs},     {"optimizer", optimizer},
            {"beta1", beta1},       {"beta2", beta2},
            {"adam-eps", adam_eps}, {"no-shuffle", no_shuffle},
            {"stop-train-acc", stop_train_acc}};
  }
  NNConfig config_template() const {
    NNConfig cfg;
    cfg.embed_dim = embed;
    cfg.conv_channels = channels;
    cfg.kernel_sizes = kernels;
    cfg.lstm_hidden = lstm;
    cfg.vocab_size = 2;   // placeholders; filled per corpus
    cfg.num_intents = 2;
    validate_usage([&] { cfg.validate(); });
    return cfg;
  }
  TrainHyper hyper(std::uint64_t seed) const {
    TrainHyper h;
    h.learning_rate = lr;
    h.batch_size = batch;
    h.max_epochs = epochs;
    if (optimizer == "adam") {
      h.optimizer = OptimizerKind::kAdam;
    } else if (optimizer == "sgd") {
      h.optimizer = OptimizerKind::kSgd;
    } else {
      throw UsageError("--optimizer must be adam or sgd");
    }
    h.adam = {beta1, beta2, adam_eps};
    h.seed = seed;
    h.shuffle = !no_shuffle;
    if (stop_train_acc >= 0.0) h.stop_train_accuracy = stop_train_acc;
    if (!(h.learning_rate > 0.0) || h.batch_size < 1 || h.max_epochs < 1) {
      throw UsageError("bad training hyperparameters");
    }
    return h;
  }
};

struct ExperimentFlags {
  std::vector<std::string> corpora;
  std::string out_dir = ".";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int threads = 1;
  std::uint64_t budget = 0;  // 0: smallest per-language training split
  SplitFlags split;
  NBFlags nb;
  NNFlags nn;

  void attach(CLI::App& cmd, ConfigOverlay& overlay) {
    auto* a = cmd.add_option("--corpus", corpora, "Corpus TSV files")
                  ->delimiter(',');
    auto* b = cmd.add_option("--out-dir", out_dir, "Output directory");
    auto* c = cmd.add_option("--seeds", seeds, "Training seeds")
                  ->delimiter(',');
    auto* d = cmd.add_option("--threads", threads,
                             "Concurrent independent runs");
    auto* e = cmd.add_option("--budget", budget,
                             "Total training budget (0: auto)");
    overlay.bind(a, "corpus", corpora);
    overlay.bind(b, "out-dir", out_dir);
    overlay.bind(c, "seeds", seeds);
    overlay.bind(d, "threads", threads);
    overlay.bind(e, "budget", budget);
    split.attach(cmd, overlay);
    nb.attach(cmd, overlay);
    nn.attach(cmd, overlay);
  }
  json to_json() const {
    json j = {{"corpus", corpora}, {"out-dir", out_dir},
              {"seeds", seeds},    {"threads", threads},
              {"budget", budget}};
    j.update(split.to_json());
    j.update(nb.to_json());
    j.update(nn.to_json());
    return j;
  }

  ExperimentConfig config() const {
    if (seeds.empty()) throw UsageError("--seeds must be non-empty");
    if (threads < 1) throw UsageError("--threads must be >= 1");
    ExperimentConfig cfg;
    cfg.nb = nb.config();
    cfg.nn = nn.config_template();
    cfg.hyper = nn.hyper(seeds.front());
    cfg.seeds = seeds;
    cfg.threads = threads;
    return cfg;
  }

  std::map<std::string, SplitPair> load_splits() const {
    if (corpora.size() < 1) throw UsageError("--corpus is required");
    Corpus merged = parse_corpus_files(corpora);
    if (merged.languages().size() < 2) {
      throw UsageError("need corpora covering >= 2 languages");
    }
    return split_by_language(merged, split.spec());
  }

  std::optional<std::size_t> budget_opt() const {
    if (budget == 0) return std::nullopt;
    return static_cast<std::size_t>(budget);
  }
};

// --- gen ---------------------------------------------------------------------

struct GenCommand {
  std::string preset;
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int languages = 4, inventory = 60, intents = 6;
  int motifs_per_intent = 2, motif_length = 8;
  int min_len = 20, max_len = 60;
  double overlap = 0.6, noise = 0.05;
  int per_cell = 120;
  std::string family = "custom";

  ConfigOverlay overlay;
  CLI::App* cmd = nullptr;
  CLI::Option *preset_opt = nullptr, *family_opt = nullptr;
  std::vector<std::pair<CLI::Option*, std::string>> spec_opts;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("gen", "Generate a synthetic corpus family");
    cmd->add_option("--config", config_path, "Manifest to rerun");
    preset_opt = cmd->add_option("--preset", preset,
                                 "indic-like | romance-like");
    auto bind_spec = [&](const char* flag, const char* key, auto& target,
                         const char* help) {
      auto* opt = cmd->add_option(flag, target, help);
      overlay.bind(opt, key, target);
      spec_opts.emplace_back(opt, key);
      return opt;
    };
    auto* s = cmd->add_option("--seed", seed, "Generation seed");
    auto* o = cmd->add_option("--out-dir", out_dir, "Output directory");
    overlay.bind(s, "seed", seed);
    overlay.bind(o, "out-dir", out_dir);
    bind_spec("--languages", "languages", languages, "Number of languages");
    bind_spec("--inventory", "inventory", inventory,
              "Phone inventory size (excl. PAD)");
    bind_spec("--intents", "intents", intents, "Number of intents");
    bind_spec("--motifs-per-intent", "motifs-per-intent", motifs_per_intent,
              "Motifs per intent");
    bind_spec("--motif-length", "motif-length", motif_length, "Motif length");
    bind_spec("--min-len", "min-len", min_len, "Minimum utterance length");
    bind_spec("--max-len", "max-len", max_len, "Maximum utterance length");
    bind_spec("--overlap", "overlap", overlap,
              "Cross-language phone overlap in [0,1]");
    bind_spec("--noise", "noise", noise, "Substitution noise rate");
    bind_spec("--per-cell", "per-cell", per_cell,
              "Utterances per (language,intent)");
    family_opt = cmd->add_option("--family", family, "Family name for files");
    overlay.bind(family_opt, "family", family);
    spec_opts.emplace_back(family_opt, "family");
  }

  int run() {
    json config_options;
    bool have_config = !config_path.empty();
    if (have_config) {
      config_options = load_config_for("gen", config_path);
      overlay.apply(config_options);
    }

    FamilySpec spec;
    if (!preset.empty()) {
      spec = family_preset(preset);
      // Explicit flags (or manifest values) override preset fields.
      auto explicitly_set = [&](CLI::Option* opt, const std::string& key) {
        return opt->count() > 0 ||
               (have_config && config_options.contains(key));
      };
      if (explicitly_set(spec_opts[0].first, "languages"))
        spec.num_languages = languages;
      if (explicitly_set(spec_opts[1].first, "inventory"))
        spec.inventory_size = inventory;
      if (explicitly_set(spec_opts[2].first, "intents"))
        spec.num_intents = intents;
      if (explicitly_set(spec_opts[3].first, "motifs-per-intent"))
        spec.motifs_per_intent = motifs_per_intent;
      if (explicitly_set(spec_opts[4].first, "motif-length"))
        spec.motif_length = motif_length;
      if (explicitly_set(spec_opts[5].first, "min-len"))
        spec.min_utterance_length = min_len;
      if (explicitly_set(spec_opts[6].first, "max-len"))
        spec.max_utterance_length = max_len;
      if (explicitly_set(spec_opts[7].first, "overlap")) spec.overlap = overlap;
      if (explicitly_set(spec_opts[8].first, "noise")) spec.noise_rate = noise;
      if (explicitly_set(spec_opts[9].first, "per-cell"))
        spec.utterances_per_cell = per_cell;
      if (explicitly_set(family_opt, "family")) spec.family_name = family;
    } else {
      spec.num_languages = languages;
      spec.inventory_size = inventory;
      spec.num_intents = intents;
      spec.motifs_per_intent = motifs_per_intent;
      spec.motif_length = motif_length;
      spec.min_utterance_length = min_len;
      spec.max_utterance_length = max_len;
      spec.overlap = overlap;
      spec.noise_rate = noise;
      spec.utterances_per_cell = per_cell;
      spec.family_name = family;
    }
    validate_usage([&] { spec.validate(); });

    auto corpora = generate_family(spec, seed);
    ensure_dir(out_dir);
    for (const auto& [lang, corpus] : corpora) {
      std::string path =
          out_dir + "/" + spec.family_name + "_" + lang + ".tsv";
      write_file_atomic(path, corpus_to_tsv(corpus));
      std::cout << "wrote " << path << "\n";
    }

    json options = {{"seed", seed},
                    {"out-dir", out_dir},
                    {"languages", spec.num_languages},
                    {"inventory", spec.inventory_size},
                    {"intents", spec.num_intents},
                    {"motifs-per-intent", spec.motifs_per_intent},
                    {"motif-length", spec.motif_length},
                    {"min-len", spec.min_utterance_length},
                    {"max-len", spec.max_utterance_length},
                    {"overlap", spec.overlap},
                    {"noise", spec.noise_rate},
                    {"per-cell", spec.utterances_per_cell},
                    {"family", spec.family_name}};
    write_json_atomic(make_manifest("gen", options, {}, {seed}),
                      out_dir + "/gen.manifest.json");
    return kExitOk;
  }
};

// --- train -------------------------------------------------------------------

struct TrainCommand {
  std::string config_path;
  std::vector<std::string> corpora;
  std::string classifier = "nb";
  std::string model_out = "model.json";
  std::string save_splits;  // prefix; empty = off
  std::uint64_t seed = 1;
  SplitFlags split;
  NBFlags nb;
  NNFlags nn;
  ConfigOverlay overlay;
  CLI::App* cmd = nullptr;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("train", "Train a classifier on a corpus");
    cmd->add_option("--config", config_path, "Manifest to rerun");
    auto* a = cmd->add_option("--corpus", corpora, "Corpus TSV files")
                  ->delimiter(',');
    auto* b = cmd->add_option("--classifier", classifier, "nb | nn");
    auto* c = cmd->add_option("--model-out", model_out, "Archive path");
    auto* d = cmd->add_option("--save-splits", save_splits,
                              "Write <prefix>.train.tsv/.test.tsv");
    auto* e = cmd->add_option("--seed", seed, "Training seed");
    overlay.bind(a, "corpus", corpora);
    overlay.bind(b, "classifier", classifier);
    overlay.bind(c, "model-out", model_out);
    overlay.bind(d, "save-splits", save_splits);
    overlay.bind(e, "seed", seed);
    split.attach(*cmd, overlay);
    nb.attach(*cmd, overlay);
    nn.attach(*cmd, overlay);
  }

  int run() {
    if (!config_path.empty()) {
      overlay.apply(load_config_for("train", config_path));
    }
    if (corpora.empty()) throw UsageError("--corpus is required");
    if (classifier != "nb" && classifier != "nn") {
      throw UsageError("--classifier must be nb or nn");
    }
    NBConfig nb_cfg = nb.config();
    NNConfig nn_tmpl = nn.config_template();
    TrainHyper hyper = nn.hyper(seed);
    SplitSpec split_spec = split.spec();

    Corpus corpus = parse_corpus_files(corpora);
    SplitResult parts = phintent::split(corpus, split_spec);
    if (!save_splits.empty()) {
      write_file_atomic(save_splits + ".train.tsv",
                        corpus_to_tsv(parts.train));
      write_file_atomic(save_splits + ".test.tsv", corpus_to_tsv(parts.test));
    }

    double train_acc = 0.0, test_acc = 0.0;
    if (classifier == "nb") {
      NBModel model = train_nb(parts.train, nb_cfg);
      auto predict = [&model](const Utterance& u) {
        return nb_predict(model, u);
      };
      train_acc = evaluate(predict, parts.train);
      test_acc = evaluate(predict, parts.test);
      save_model(model_out, model, corpus.inventory, corpus.labels);
    } else {
      NNConfig cfg = nn_tmpl;
      cfg.vocab_size = corpus.inventory.size();
      cfg.num_intents = corpus.labels.size();
      TrainResult result = train_nn(parts.train, cfg, hyper);
      train_acc = 100.0 * result.history.epochs.back().train_accuracy;
      test_acc = evaluate(
          [&result](const Utterance& u) { return nn_predict(result.model, u); },
          parts.test);
      save_model(model_out, result.model, corpus.inventory, corpus.labels);
    }

    std::cout << "train_accuracy " << fmt_one_decimal(train_acc) << "\n";
    std::cout << "test_accuracy " << fmt_one_decimal(test_acc) << "\n";

    json options = {{"corpus", corpora},
                    {"classifier", classifier},
                    {"model-out", model_out},
                    {"save-splits", save_splits},
                    {"seed", seed}};
    options.update(split.to_json());
    options.update(nb.to_json());
    options.update(nn.to_json());
    write_json_atomic(
        make_manifest("train", options, corpora, {seed, split.split_seed}),
        model_out + ".manifest.json");
    return kExitOk;
  }
};

// --- eval --------------------------------------------------------------------

struct EvalCommand {
  std::string model_path;
  std::vector<std::string> corpora;
  CLI::App* cmd = nullptr;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("eval", "Evaluate a saved model on a corpus");
    cmd->add_option("--model", model_path, "Model archive")->required();
    cmd->add_option("--corpus", corpora, "Corpus TSV files")
        ->delimiter(',')
        ->required();
  }

  int run() {
    LoadedModel model = load_model(model_path);
    Corpus corpus = parse_corpus_files(corpora);
    if (corpus.utterances.empty()) throw EmptyCorpus();
    std::size_t correct = 0;
    for (const auto& u : corpus.utterances) {
      Utterance mapped;
      mapped.language = u.language;
      mapped.intent = 0;
      mapped.phones = map_phones(model.inventory, corpus.inventory, u.phones);
      int predicted = model.predict(mapped);
      if (model.labels.label(predicted) == corpus.labels.label(u.intent)) {
        ++correct;
      }
    }
    double accuracy = 100.0 * static_cast<double>(correct) /
                      static_cast<double>(corpus.utterances.size());
    std::cout << "accuracy " << fmt_one_decimal(accuracy) << "\n";
    return kExitOk;
  }
};

// --- matrix / multi / inject ---------------------------------------------------

struct MatrixCommand {
  std::string config_path;
  ExperimentFlags flags;
  ConfigOverlay overlay;
  CLI::App* cmd = nullptr;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("matrix",
                             "Monolingual cross-lingual accuracy matrix");
    cmd->add_option("--config", config_path, "Manifest to rerun");
    flags.attach(*cmd, overlay);
  }

  int run() {
    if (!config_path.empty()) {
      overlay.apply(load_config_for("matrix", config_path));
    }
    auto splits = flags.load_splits();
    EvalMatrix matrix = monolingual_matrix(splits, flags.config());
    ensure_dir(flags.out_dir);
    write_file_atomic(flags.out_dir + "/matrix.csv",
                      emit_report(matrix, ReportFormat::kCsv));
    write_file_atomic(flags.out_dir + "/matrix.md",
                      emit_report(matrix, ReportFormat::kMarkdown));
    write_json_atomic(
        make_manifest("matrix", flags.to_json(), flags.corpora, flags.seeds),
        flags.out_dir + "/matrix.manifest.json");
    std::cout << "wrote " << flags.out_dir << "/matrix.csv\n";
    std::cout << "wrote " << flags.out_dir << "/matrix.md\n";
    return kExitOk;
  }
};

struct MultiCommand {
  std::string config_path;
  int subset_size = 3;
  ExperimentFlags flags;
  ConfigOverlay overlay;
  CLI::App* cmd = nullptr;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand(
        "multi", "Multilingual leave-languages-out accuracy matrix");
    cmd->add_option("--config", config_path, "Manifest to rerun");
    auto* n = cmd->add_option("--n", subset_size, "Training subset size");
    overlay.bind(n, "n", subset_size);
    flags.attach(*cmd, overlay);
  }

  int run() {
    if (!config_path.empty()) {
      overlay.apply(load_config_for("multi", config_path));
    }
    auto splits = flags.load_splits();
    EvalMatrix matrix;
    validate_usage([&] {
      if (!(subset_size >= 2 &&
            subset_size < static_cast<int>(splits.size()))) {
        throw UsageError("--n must satisfy 2 <= n < #languages");
      }
    });
    matrix = multilingual_matrix(splits, subset_size, flags.budget_opt(),
                                 flags.config());
    ensure_dir(flags.out_dir);
    write_file_atomic(flags.out_dir + "/multi.csv",
                      emit_report(matrix, ReportFormat::kCsv));
    write_file_atomic(flags.out_dir + "/multi.md",
                      emit_report(matrix, ReportFormat::kMarkdown));
    json options = flags.to_json();
    options["n"] = subset_size;
    write_json_atomic(
        make_manifest("multi", options, flags.corpora, flags.seeds),
        flags.out_dir + "/multi.manifest.json");
    std::cout << "wrote " << flags.out_dir << "/multi.csv\n";
    std::cout << "wrote " << flags.out_dir << "/multi.md\n";
    return kExitOk;
  }
};

struct InjectCommand {
  std::string config_path;
  std::string train_languages;
  std::string blind;
  std::string ratios = "0:0.25:0.05";
  ExperimentFlags flags;
  ConfigOverlay overlay;
  CLI::App* cmd = nullptr;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("inject",
                             "Blind-language injection accuracy curve");
    cmd->add_option("--config", config_path, "Manifest to rerun");
    auto* a = cmd->add_option("--train-languages", train_languages,
                              "Comma-separated training languages");
    auto* b = cmd->add_option("--blind", blind, "Blind language");
    auto* c = cmd->add_option("--ratios", ratios,
                              "start:end:step or comma list");
    overlay.bind(a, "train-languages", train_languages);
    overlay.bind(b, "blind", blind);
    overlay.bind(c, "ratios", ratios);
    flags.attach(*cmd, overlay);
  }

  int run() {
    if (!config_path.empty()) {
      overlay.apply(load_config_for("inject", config_path));
    }
    if (train_languages.empty()) {
      throw UsageError("--train-languages is required");
    }
    if (blind.empty()) throw UsageError("--blind is required");
    InjectionSchedule schedule{blind, parse_ratios(ratios)};
    auto splits = flags.load_splits();
    InjectionCurve curve =
        injection_curve(splits, split_commas(train_languages), schedule,
                        flags.budget_opt(), flags.config());
    ensure_dir(flags.out_dir);
    write_file_atomic(flags.out_dir + "/inject.csv",
                      emit_report(curve, ReportFormat::kCsv));
    write_file_atomic(flags.out_dir + "/inject.md",
                      emit_report(curve, ReportFormat::kMarkdown));
    json options = flags.to_json();
    options["train-languages"] = train_languages;
    options["blind"] = blind;
    options["ratios"] = ratios;
    write_json_atomic(
        make_manifest("inject", options, flags.corpora, flags.seeds),
        flags.out_dir + "/inject.manifest.json");
    std::cout << "wrote " << flags.out_dir << "/inject.csv\n";
    std::cout << "wrote " << flags.out_dir << "/inject.md\n";
    return kExitOk;
  }
};

// --- gradcheck -----------------------------------------------------------------

struct GradcheckCommand {
  int vocab = 12, embed = 8, channels = 6, lstm = 10, intents = 3;
  std::vector<int> kernels = {3, 5};
  std::uint64_t seed = 1;
  double h = 1e-5, tol = 1e-4;
  CLI::App* cmd = nullptr;

  void attach(CLI::App& app) {
    cmd = app.add_subcommand("gradcheck",
                             "Finite-difference check of analytic gradients");
    cmd->add_option("--vocab", vocab, "Vocabulary size incl. PAD");
    cmd->add_option("--embed", embed, "Embedding dimension");
    cmd->add_option("--channels", channels, "Conv channels per branch");
    cmd->add_option("--kernels", kernels, "Kernel sizes")->delimiter(',');
    cmd->add_option("--lstm", lstm, "LSTM hidden size");
    cmd->add_option("--intents", intents, "Number of intents");
    cmd->add_option("--seed", seed, "Seed for model and batch");
    cmd->add_option("--step", h, "Finite-difference step");
    cmd->add_option("--tol", tol, "Per-tensor max relative error");
  }

  int run() {
    NNConfig cfg;
    cfg.vocab_size = vocab;
    cfg.embed_dim = embed;
    cfg.conv_channels = channels;
    cfg.kernel_sizes = kernels;
    cfg.lstm_hidden = lstm;
    cfg.num_intents = intents;
    validate_usage([&] { cfg.validate(); });
    if (!(h > 0.0)) throw UsageError("--step must be > 0");

    GradCheckReport report = grad_check(cfg, seed, h, tol);
    for (const auto& t : report.tensors) {
      std::printf("%-12s max_rel_err %.3e %s\n", t.name.c_str(),
                  t.max_rel_err, t.pass ? "PASS" : "FAIL");
    }
    std::printf("%s\n", report.all_pass ? "all tensors PASS" : "FAILED");
    return report.all_pass ? kExitOk : kExitCheckFailed;
  }
};

int dispatch(int argc, char** argv) {
  CLI::App app{"Intent classification from phonemic transcripts"};
  app.require_subcommand(1);

  GenCommand gen;
  TrainCommand train;
  EvalCommand eval;
  MatrixCommand matrix;
  MultiCommand multi;
  InjectCommand inject;
  GradcheckCommand gradcheck;
  gen.attach(app);
  train.attach(app);
  eval.attach(app);
  matrix.attach(app);
  multi.attach(app);
  inject.attach(app);
  gradcheck.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen.cmd->parsed()) return gen.run();
    if (train.cmd->parsed()) return train.run();
    if (eval.cmd->parsed()) return eval.run();
    if (matrix.cmd->parsed()) return matrix.run();
    if (multi.cmd->parsed()) return multi.run();
    if (inject.cmd->parsed()) return inject.run();
    if (gradcheck.cmd->parsed()) return gradcheck.run();
    std::cerr << "no command given\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnknownPreset& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidSpec& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const VocabularyMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVocabulary;
  } catch (const VersionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMalformed;
  } catch (const CorruptArchive& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMalformed;
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMalformed;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTraining;
  } catch (const SamplingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTraining;
  } catch (const NNError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTraining;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTraining;
  }
}

}  // namespace

int main(int argc, char** argv) { return dispatch(argc, argv); }
