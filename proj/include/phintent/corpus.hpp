#pragma once

// Domain types for phoneme-transcript corpora plus the TSV interchange
// format. A corpus couples a phone inventory (the classifier vocabulary),
// an intent label set, and the labeled utterances themselves.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace phintent {

// Reserved padding symbol. It always sits at inventory index 0, never
// appears inside an utterance, and exists only for neural-net batching.
inline constexpr const char* kPadSymbol = "PAD";

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Errors raised by classifier training/scoring over corpus content.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyCorpus : TrainingError {
  EmptyCorpus() : TrainingError("empty training corpus") {}
};

struct EmptyClass : TrainingError {
  explicit EmptyClass(const std::string& intent_label)
      : TrainingError("intent has no training utterances: " + intent_label),
        intent(intent_label) {}
  std::string intent;
};

struct UnknownPhone : TrainingError {
  explicit UnknownPhone(int idx)
      : TrainingError("phone index outside inventory: " + std::to_string(idx)),
        index(idx) {}
  int index;
};

struct DuplicateSymbol : CorpusError {
  explicit DuplicateSymbol(const std::string& s)
      : CorpusError("duplicate phone symbol: " + s), symbol(s) {}
  std::string symbol;
};

struct EmptySymbol : CorpusError {
  EmptySymbol() : CorpusError("empty phone symbol") {}
};

struct WhitespaceInSymbol : CorpusError {
  explicit WhitespaceInSymbol(const std::string& s)
      : CorpusError("whitespace inside phone symbol: " + s), symbol(s) {}
  std::string symbol;
};

struct MalformedLine : CorpusError {
  MalformedLine(int line, const std::string& why)
      : CorpusError("line " + std::to_string(line) + ": " + why),
        line_no(line) {}
  int line_no;
};

struct EmptyPhoneSequence : CorpusError {
  explicit EmptyPhoneSequence(int line)
      : CorpusError("line " + std::to_string(line) + ": empty phone sequence"),
        line_no(line) {}
  int line_no;
};

// Ordered phone symbols with a stable inverse index. Index 0 is PAD.
class PhoneInventory {
 public:
  PhoneInventory();

  // Appends a symbol and returns its index. Throws DuplicateSymbol,
  // EmptySymbol or WhitespaceInSymbol.
  int add(const std::string& symbol);

  // Index of an existing symbol, or -1.
  int index_of(std::string_view symbol) const;

  const std::string& symbol(int index) const { return symbols_.at(index); }
  int size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  bool operator==(const PhoneInventory& other) const {
    return symbols_ == other.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

// Builds an inventory from phone symbols, prepending PAD at index 0 and
// preserving the input order.
PhoneInventory build_inventory(const std::vector<std::string>& symbols);

// Ordered unique intent labels.
class IntentLabelSet {
 public:
  // Returns the index of `label`, adding it in first-appearance order.
  int intern(const std::string& label);
  int index_of(std::string_view label) const;
  const std::string& label(int index) const { return labels_.at(index); }
  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const IntentLabelSet& other) const {
    return labels_ == other.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

// One labeled example: the phone indices reference a shared inventory and
// the intent references a shared label set.
struct Utterance {
  std::string language;
  int intent = 0;
  std::vector<int> phones;  // inventory indices, all nonzero (not PAD)
};

struct Corpus {
  PhoneInventory inventory;
  IntentLabelSet labels;
  std::vector<Utterance> utterances;

  std::size_t size() const { return utterances.size(); }

  // Distinct language tags, lexicographically sorted.
  std::vector<std::string> languages() const;
};

// Shallow derivative: same inventory/labels, different utterance list.
Corpus with_utterances(const Corpus& base, std::vector<Utterance> utterances);

// Utterances of one language, under the shared inventory/labels.
Corpus filter_language(const Corpus& corpus, std::string_view language);

// --- TSV interchange -------------------------------------------------------
//
// One utterance per line: `language<TAB>intent<TAB>phone phone ...`, UTF-8,
// LF line endings, single ASCII spaces between phones, no trailing
// whitespace. Lines starting with `#` are ignored. The inventory and label
// set are derived from the file in first-appearance order (PAD auto-added).

Corpus parse_corpus(std::istream& in);
Corpus parse_corpus_text(std::string_view text);

// Parses several TSV files into one corpus with a shared inventory and
// label set; utterances keep file order. Throws IoError on unreadable
// paths and the usual parse errors (messages name the offending file).
Corpus parse_corpus_files(const std::vector<std::string>& paths);

void serialize_corpus(const Corpus& corpus, std::ostream& out);
std::string corpus_to_tsv(const Corpus& corpus);

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Whole-file helpers (atomic write: temp file + rename).
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace phintent
