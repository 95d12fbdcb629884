#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "m2r/sentence_icl.hpp"
#include "m2r/token_knn.hpp"

namespace m2r {

// Datastore file layout, all integers and floats little-endian:
//
//   magic "M2RD" | u32 version | u32 kind | u32 dim | u64 count
//   f32 keys[count * dim]                                 (row-major)
//   token kind:    u32 vocab_size | u32 values[count]
//   sentence kind: u64 text_offsets[count + 1] | u8 text[text_offsets[count]]
//                  f64 durations[count]
//                  u64 id_offsets[count + 1]   | u8 ids[id_offsets[count]]
//                  u64 token_offsets[count + 1]| u32 tokens[token_offsets[count]]
//
// The file ends exactly after the last block.
inline constexpr char kDatastoreMagic[4] = {'M', '2', 'R', 'D'};
inline constexpr std::uint32_t kDatastoreVersion = 1;

enum class DatastoreKind : std::uint32_t { kSentence = 1, kToken = 2 };

std::string serialize_datastore(const TokenDatastore& store);
std::string serialize_datastore(const SentenceDatastore& store);

TokenDatastore parse_token_datastore(std::string_view bytes);
SentenceDatastore parse_sentence_datastore(std::string_view bytes);

// Kind recorded in a serialized datastore header.
DatastoreKind datastore_kind(std::string_view bytes);

void save_datastore(const TokenDatastore& store, const std::filesystem::path& path);
void save_datastore(const SentenceDatastore& store, const std::filesystem::path& path);
TokenDatastore load_token_datastore(const std::filesystem::path& path);
SentenceDatastore load_sentence_datastore(const std::filesystem::path& path);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace m2r
