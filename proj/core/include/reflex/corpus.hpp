// SPDX-License-Identifier: Apache-2.0
/**
 * @file   corpus.hpp
 * @brief  Segmented cognate corpora, vocabularies and stratified folds.
 *
 * Corpus file format (UTF-8, one pair per line):
 *
 *     language_id <TAB> etymon segments <TAB> reflex segments
 *
 * Segments are separated by single spaces. Lines starting with '#' are
 * comments; blank lines are skipped.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace reflex {

using SegmentId = std::int32_t;
using LanguageId = std::int32_t;
using SegmentSeq = std::vector<SegmentId>;

/// True for stress / pitch marks (ˈ ˌ and the Chao tone letters).
bool is_suprasegmental_symbol(std::string_view symbol);

struct Segment {
  std::string symbol;
  bool suprasegmental = false;
};

/// Interns segment symbols to dense ids 0..size()-1.
class Vocabulary {
 public:
  static constexpr SegmentId kPad = 0;
  static constexpr SegmentId kBos = 1;
  static constexpr SegmentId kEos = 2;
  static constexpr std::string_view kPadSymbol = "<pad>";
  static constexpr std::string_view kBosSymbol = "<s>";
  static constexpr std::string_view kEosSymbol = "</s>";

  /// Output vocabularies reserve PAD, BOS, EOS as ids 0, 1, 2.
  static Vocabulary with_reserved();
  static bool is_reserved_symbol(std::string_view symbol);

  SegmentId intern(std::string_view symbol);
  std::optional<SegmentId> find(std::string_view symbol) const;
  /// Throws ArgumentError for unknown symbols.
  SegmentId id(std::string_view symbol) const;
  const Segment& segment(SegmentId id) const;
  const std::string& symbol(SegmentId id) const { return segment(id).symbol; }
  bool is_suprasegmental(SegmentId id) const { return segment(id).suprasegmental; }
  bool has_reserved() const noexcept { return reserved_; }
  std::size_t size() const noexcept { return segments_.size(); }
  const std::vector<Segment>& segments() const noexcept { return segments_; }

  /// Space-joined symbols.
  std::string render(const SegmentSeq& seq) const;
  /// Split on single spaces and look every symbol up.
  SegmentSeq encode(std::string_view text) const;

  bool operator==(const Vocabulary& other) const;

 private:
  std::vector<Segment> segments_;
  std::unordered_map<std::string, SegmentId> index_;
  bool reserved_ = false;
};

struct CognatePair {
  LanguageId language = 0;
  SegmentSeq etymon;
  SegmentSeq reflex;

  bool operator==(const CognatePair&) const = default;
};

class Corpus {
 public:
  Corpus();

  LanguageId add_language(std::string_view name);
  /// Adds a pair by symbols, interning into both vocabularies.
  void add_pair(std::string_view language, const std::vector<std::string>& etymon,
                const std::vector<std::string>& reflex);

  const std::vector<CognatePair>& pairs() const noexcept { return pairs_; }
  const std::vector<std::string>& languages() const noexcept { return languages_; }
  std::optional<LanguageId> find_language(std::string_view name) const;
  LanguageId language_id(std::string_view name) const;
  const std::string& language_name(LanguageId id) const;
  const Vocabulary& input_vocab() const noexcept { return input_vocab_; }
  const Vocabulary& output_vocab() const noexcept { return output_vocab_; }
  std::vector<std::size_t> language_counts() const;
  std::size_t size() const noexcept { return pairs_.size(); }

 private:
  std::vector<CognatePair> pairs_;
  std::vector<std::string> languages_;
  std::unordered_map<std::string, LanguageId> language_index_;
  Vocabulary input_vocab_;
  Vocabulary output_vocab_;
};

/// Split on single spaces; throws on empty segments.
std::vector<std::string> split_segments(std::string_view text);

Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
/// Writes the canonical file form of the corpus (comments are not kept).
void write_corpus(std::ostream& out, const Corpus& corpus);

struct FoldSplit {
  std::size_t fold = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified K-fold: each language's indices are shuffled and cut into K
/// contiguous chunks; chunk k is that language's share of fold k's test set.
std::vector<FoldSplit> make_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed);

}  // namespace reflex
