#include "phintent/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace phintent {

namespace {

bool has_ascii_whitespace(std::string_view s) {
  return s.find_first_of(" \t\n\r\v\f") != std::string_view::npos;
}

}  // namespace

PhoneInventory::PhoneInventory() {
  symbols_.push_back(kPadSymbol);
  index_.emplace(kPadSymbol, 0);
}

int PhoneInventory::add(const std::string& symbol) {
  if (symbol.empty()) throw EmptySymbol();
  if (has_ascii_whitespace(symbol)) throw WhitespaceInSymbol(symbol);
  if (index_.count(symbol)) throw DuplicateSymbol(symbol);
  int idx = static_cast<int>(symbols_.size());
  symbols_.push_back(symbol);
  index_.emplace(symbol, idx);
  return idx;
}

int PhoneInventory::index_of(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? -1 : it->second;
}

PhoneInventory build_inventory(const std::vector<std::string>& symbols) {
  PhoneInventory inv;
  for (const auto& s : symbols) inv.add(s);
  return inv;
}

int IntentLabelSet::intern(const std::string& label) {
  auto it = index_.find(label);
  if (it != index_.end()) return it->second;
  int idx = static_cast<int>(labels_.size());
  labels_.push_back(label);
  index_.emplace(label, idx);
  return idx;
}

int IntentLabelSet::index_of(std::string_view label) const {
  auto it = index_.find(std::string(label));
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::string> Corpus::languages() const {
  std::set<std::string> tags;
  for (const auto& u : utterances) tags.insert(u.language);
  return {tags.begin(), tags.end()};
}

Corpus with_utterances(const Corpus& base, std::vector<Utterance> utterances) {
  Corpus out;
  out.inventory = base.inventory;
  out.labels = base.labels;
  out.utterances = std::move(utterances);
  return out;
}

Corpus filter_language(const Corpus& corpus, std::string_view language) {
  std::vector<Utterance> kept;
  for (const auto& u : corpus.utterances) {
    if (u.language == language) kept.push_back(u);
  }
  return with_utterances(corpus, std::move(kept));
}

namespace {

// Incremental corpus assembly shared by the single- and multi-file parsers.
class CorpusBuilder {
 public:
  void consume(std::istream& in) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) throw MalformedLine(line_no, "blank line");
      if (line[0] == '#') continue;

      auto tab1 = line.find('\t');
      auto tab2 = tab1 == std::string::npos ? std::string::npos
                                            : line.find('\t', tab1 + 1);
      if (tab1 == std::string::npos || tab2 == std::string::npos ||
          line.find('\t', tab2 + 1) != std::string::npos) {
        throw MalformedLine(line_no, "expected 3 tab-separated fields");
      }
      std::string language = line.substr(0, tab1);
      std::string intent = line.substr(tab1 + 1, tab2 - tab1 - 1);
      std::string phones = line.substr(tab2 + 1);
      if (language.empty()) throw MalformedLine(line_no, "empty language tag");
      if (has_ascii_whitespace(language)) {
        throw MalformedLine(line_no, "whitespace in language tag");
      }
      if (intent.empty()) throw MalformedLine(line_no, "empty intent label");
      if (phones.empty()) throw EmptyPhoneSequence(line_no);
      if (phones.front() == ' ' || phones.back() == ' ') {
        throw MalformedLine(line_no, "leading or trailing space in phones");
      }

      Utterance u;
      u.language = std::move(language);
      u.intent = corpus_.labels.intern(intent);
      std::size_t pos = 0;
      while (pos <= phones.size()) {
        auto next = phones.find(' ', pos);
        std::string sym = phones.substr(
            pos, next == std::string::npos ? std::string::npos : next - pos);
        if (sym.empty()) {
          throw MalformedLine(line_no, "consecutive spaces in phones");
        }
        int idx = corpus_.inventory.index_of(sym);
        if (idx == 0) {
          throw MalformedLine(line_no, "reserved PAD symbol in phones");
        }
        if (idx < 0) idx = corpus_.inventory.add(sym);
        u.phones.push_back(idx);
        if (next == std::string::npos) break;
        pos = next + 1;
      }
      corpus_.utterances.push_back(std::move(u));
    }
  }

  Corpus take() { return std::move(corpus_); }

 private:
  Corpus corpus_;
};

}  // namespace

Corpus parse_corpus(std::istream& in) {
  CorpusBuilder b;
  b.consume(in);
  return b.take();
}

Corpus parse_corpus_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_corpus(in);
}

Corpus parse_corpus_files(const std::vector<std::string>& paths) {
  CorpusBuilder b;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus file: " + path);
    try {
      b.consume(in);
    } catch (const CorpusError& e) {
      throw CorpusError(path + ": " + e.what());
    }
  }
  return b.take();
}

void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& u : corpus.utterances) {
    out << u.language << '\t' << corpus.labels.label(u.intent) << '\t';
    for (std::size_t i = 0; i < u.phones.size(); ++i) {
      if (i) out << ' ';
      out << corpus.inventory.symbol(u.phones[i]);
    }
    out << '\n';
  }
}

std::string corpus_to_tsv(const Corpus& corpus) {
  std::ostringstream out;
  serialize_corpus(corpus, out);
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw IoError("error reading file: " + path);
  return buf.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out.good()) throw IoError("error writing file: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot rename " + tmp + " to " + path);
  }
}

}  // namespace phintent
