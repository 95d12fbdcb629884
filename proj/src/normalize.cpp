#include "m2r/normalize.hpp"

#include <fstream>
#include <istream>
#include <string>

#include "m2r/errors.hpp"

namespace m2r {

SymbolSeq utf8_decode(std::string_view text) {
  SymbolSeq out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    Symbol cp = 0;
    if (lead < 0x80) {
      len = 1;
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      len = 4;
      cp = lead & 0x07;
    } else {
      throw Error(ErrorCode::kFormat, "invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > text.size()) {
      throw Error(ErrorCode::kFormat, "truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (std::size_t j = 1; j < len; ++j) {
      const auto b = static_cast<unsigned char>(text[i + j]);
      if ((b & 0xC0) != 0x80) {
        throw Error(ErrorCode::kFormat,
                    "invalid UTF-8 continuation at offset " + std::to_string(i + j));
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(const SymbolSeq& symbols) {
  std::string out;
  for (Symbol cp : symbols) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }
  return out;
}

MappingTable MappingTable::parse(std::istream& in, std::string_view origin) {
  MappingTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto where = [&] { return std::string(origin) + ":" + std::to_string(lineno); };
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kFormat, where() + ": expected <source>\\t<replacement>");
    }
    SymbolSeq from;
    SymbolSeq to;
    try {
      from = utf8_decode(std::string_view(line).substr(0, tab));
      to = utf8_decode(std::string_view(line).substr(tab + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormat, where() + ": " + e.what());
    }
    if (from.size() != 1) {
      throw Error(ErrorCode::kFormat, where() + ": source must be a single character");
    }
    if (table.map_.contains(from.front())) {
      throw Error(ErrorCode::kFormat, where() + ": duplicate source character");
    }
    table.set(from.front(), std::move(to));
  }
  return table;
}

MappingTable MappingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open mapping table " + path.string());
  }
  return parse(in, path.string());
}

void MappingTable::set(Symbol from, SymbolSeq to) { map_[from] = std::move(to); }

SymbolSeq MappingTable::apply(const SymbolSeq& in) const {
  SymbolSeq out;
  out.reserve(in.size());
  for (Symbol s : in) {
    const auto it = map_.find(s);
    if (it == map_.end()) {
      out.push_back(s);
    } else {
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
  }
  return out;
}

SymbolSeq Normalizer::apply(const SymbolSeq& in) const {
  SymbolSeq cur = in;
  for (const auto& t : tables_) cur = t.apply(cur);
  return cur;
}

std::string Normalizer::apply_text(std::string_view text) const {
  return utf8_encode(apply(utf8_decode(text)));
}

}  // namespace m2r
