#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace m2r {

// Scoring unit: a Unicode code point in text mode, a token id in token mode.
using Symbol = std::uint32_t;
using SymbolSeq = std::vector<Symbol>;

SymbolSeq utf8_decode(std::string_view text);
std::string utf8_encode(const SymbolSeq& symbols);

// Single-symbol rewrite table. A symbol may map to zero or more symbols.
class MappingTable {
 public:
  MappingTable() = default;

  /// Parses UTF-8 lines of the form `<source>\t<replacement>`. Blank lines
  /// and lines starting with '#' are ignored. The source must be exactly one
  /// code point and may appear only once.
  static MappingTable parse(std::istream& in, std::string_view origin = "<stream>");
  static MappingTable load(const std::filesystem::path& path);

  void set(Symbol from, SymbolSeq to);
  SymbolSeq apply(const SymbolSeq& in) const;
  std::size_t size() const noexcept { return map_.size(); }

 private:
  std::unordered_map<Symbol, SymbolSeq> map_;
};

/// Ordered chain of mapping tables, e.g. a character-variant table followed
/// by a numeral-verbalization table. With no tables it is the identity.
class Normalizer {
 public:
  Normalizer() = default;

  void add_table(MappingTable table) { tables_.push_back(std::move(table)); }
  SymbolSeq apply(const SymbolSeq& in) const;
  std::string apply_text(std::string_view text) const;
  bool empty() const noexcept { return tables_.empty(); }

 private:
  std::vector<MappingTable> tables_;
};

}  // namespace m2r
