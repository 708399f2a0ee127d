// SPDX-License-Identifier: Apache-2.0
#include "reflex/corpus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "reflex/errors.hpp"
#include "reflex/random.hpp"

namespace reflex {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::with_reserved() {
  Vocabulary v;
  v.intern(kPadSymbol);
  v.intern(kBosSymbol);
  v.intern(kEosSymbol);
  v.reserved_ = true;
  return v;
}

bool Vocabulary::is_reserved_symbol(std::string_view symbol) {
  return symbol == kPadSymbol || symbol == kBosSymbol || symbol == kEosSymbol;
}

SegmentId Vocabulary::intern(std::string_view symbol) {
  if (symbol.empty()) throw ArgumentError("empty segment symbol");
  if (symbol.find_first_of(" \t\r\n") != std::string_view::npos) {
    throw ArgumentError(fmt::format("segment '{}' contains whitespace", symbol));
  }
  if (auto it = index_.find(std::string(symbol)); it != index_.end()) return it->second;
  const auto id = static_cast<SegmentId>(segments_.size());
  segments_.push_back({std::string(symbol), is_suprasegmental_symbol(symbol)});
  index_.emplace(std::string(symbol), id);
  return id;
}

std::optional<SegmentId> Vocabulary::find(std::string_view symbol) const {
  if (auto it = index_.find(std::string(symbol)); it != index_.end()) return it->second;
  return std::nullopt;
}

SegmentId Vocabulary::id(std::string_view symbol) const {
  if (auto found = find(symbol)) return *found;
  throw ArgumentError(fmt::format("segment '{}' is not in the vocabulary", symbol));
}

const Segment& Vocabulary::segment(SegmentId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= segments_.size()) {
    throw ArgumentError(fmt::format("segment id {} out of range (vocabulary size {})", id, segments_.size()));
  }
  return segments_[static_cast<std::size_t>(id)];
}

std::string Vocabulary::render(const SegmentSeq& seq) const {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += symbol(seq[i]);
  }
  return out;
}

SegmentSeq Vocabulary::encode(std::string_view text) const {
  SegmentSeq out;
  for (const auto& s : split_segments(text)) out.push_back(id(s));
  return out;
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  if (reserved_ != other.reserved_ || segments_.size() != other.segments_.size()) return false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].symbol != other.segments_[i].symbol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus() : output_vocab_(Vocabulary::with_reserved()) {}

LanguageId Corpus::add_language(std::string_view name) {
  if (name.empty()) throw ArgumentError("empty language id");
  if (auto it = language_index_.find(std::string(name)); it != language_index_.end()) return it->second;
  const auto id = static_cast<LanguageId>(languages_.size());
  languages_.emplace_back(name);
  language_index_.emplace(std::string(name), id);
  return id;
}

void Corpus::add_pair(std::string_view language, const std::vector<std::string>& etymon,
                      const std::vector<std::string>& reflex) {
  if (etymon.empty() || reflex.empty()) throw ArgumentError("cognate pairs need non-empty etymon and reflex");
  for (const auto& s : reflex) {
    if (Vocabulary::is_reserved_symbol(s)) throw ArgumentError(fmt::format("reflex uses reserved symbol '{}'", s));
  }
  CognatePair pair;
  pair.language = add_language(language);
  for (const auto& s : etymon) pair.etymon.push_back(input_vocab_.intern(s));
  for (const auto& s : reflex) pair.reflex.push_back(output_vocab_.intern(s));
  pairs_.push_back(std::move(pair));
}

std::optional<LanguageId> Corpus::find_language(std::string_view name) const {
  if (auto it = language_index_.find(std::string(name)); it != language_index_.end()) return it->second;
  return std::nullopt;
}

LanguageId Corpus::language_id(std::string_view name) const {
  if (auto id = find_language(name)) return *id;
  throw ArgumentError(fmt::format("unknown language '{}'", name));
}

const std::string& Corpus::language_name(LanguageId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= languages_.size()) {
    throw ArgumentError(fmt::format("language id {} out of range", id));
  }
  return languages_[static_cast<std::size_t>(id)];
}

std::vector<std::size_t> Corpus::language_counts() const {
  std::vector<std::size_t> counts(languages_.size(), 0);
  for (const auto& p : pairs_) ++counts[static_cast<std::size_t>(p.language)];
  return counts;
}

// ---------------------------------------------------------------------------
// File format

std::vector<std::string> split_segments(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

namespace {

// Backslash escapes: "\\" is a literal backslash, "\#" a literal '#'.
std::string unescape(std::string_view field, std::size_t line_no) {
  std::string out;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] != '\\') {
      out += field[i];
      continue;
    }
    if (i + 1 >= field.size()) throw ParseError(fmt::format("line {}: dangling backslash", line_no), line_no);
    const char next = field[++i];
    if (next == '\\' || next == '#') {
      out += next;
    } else {
      throw ParseError(fmt::format("line {}: unknown escape '\\{}'", line_no, next), line_no);
    }
  }
  return out;
}

std::string escape(std::string_view text, bool at_line_start) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\') {
      out += "\\\\";
    } else if (text[i] == '#' && at_line_start && i == 0) {
      out += "\\#";
    } else {
      out += text[i];
    }
  }
  return out;
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::vector<std::string_view> cols;
    std::string_view rest(line);
    for (;;) {
      auto tab = rest.find('\t');
      cols.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (cols.size() != 3) {
      throw ParseError(fmt::format("line {}: expected 3 tab-separated columns, found {}", line_no, cols.size()),
                       line_no);
    }
    const std::string language = unescape(cols[0], line_no);
    auto etymon = split_segments(unescape(cols[1], line_no));
    auto reflex = split_segments(unescape(cols[2], line_no));
    if (language.empty() || language.find(' ') != std::string::npos) {
      throw ParseError(fmt::format("line {}: bad language id '{}'", line_no, language), line_no);
    }
    if (etymon.empty() || reflex.empty()) {
      throw ParseError(fmt::format("line {}: empty etymon or reflex", line_no), line_no);
    }
    try {
      corpus.add_pair(language, etymon, reflex);
    } catch (const ArgumentError& e) {
      throw ParseError(fmt::format("line {}: {}", line_no, e.what()), line_no);
    }
  }
  if (corpus.size() == 0) throw ParseError("corpus contains no pairs", line_no);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open corpus '{}'", path.string()));
  return parse_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& p : corpus.pairs()) {
    out << escape(corpus.language_name(p.language), true) << '\t'
        << escape(corpus.input_vocab().render(p.etymon), false) << '\t'
        << escape(corpus.output_vocab().render(p.reflex), false) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Folds

std::vector<FoldSplit> make_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError(fmt::format("make_folds: K must be >= 2, got {}", k));
  std::vector<std::vector<std::size_t>> by_language(corpus.languages().size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_language[static_cast<std::size_t>(corpus.pairs()[i].language)].push_back(i);
  }

  Rng rng(seed);
  std::vector<FoldSplit> folds(k);
  for (std::size_t f = 0; f < k; ++f) folds[f].fold = f;
  for (auto& indices : by_language) {
    rng.shuffle(indices);
    const std::size_t n = indices.size();
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t begin = f * n / k;
      const std::size_t end = (f + 1) * n / k;
      folds[f].test.insert(folds[f].test.end(), indices.begin() + static_cast<std::ptrdiff_t>(begin),
                           indices.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  for (auto& fold : folds) {
    std::sort(fold.test.begin(), fold.test.end());
    std::vector<bool> held(corpus.size(), false);
    for (auto i : fold.test) held[i] = true;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (!held[i]) fold.train.push_back(i);
    }
  }
  return folds;
}

}  // namespace reflex
