#include "m2r/storage.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "m2r/byte_io.hpp"
#include "m2r/errors.hpp"

namespace m2r {

namespace {

constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 8;

void write_header(ByteWriter& w, DatastoreKind kind, std::size_t dim, std::size_t count) {
  w.bytes(std::string_view(kDatastoreMagic, 4));
  w.u32(kDatastoreVersion);
  w.u32(static_cast<std::uint32_t>(kind));
  w.u32(static_cast<std::uint32_t>(dim));
  w.u64(count);
}

struct Header {
  DatastoreKind kind;
  std::size_t dim;
  std::size_t count;
};

Header read_header(ByteReader& r) {
  if (r.remaining() < kHeaderBytes) {
    throw Error(ErrorCode::kSizeMismatch, "datastore file shorter than its header");
  }
  if (r.bytes(4) != std::string_view(kDatastoreMagic, 4)) {
    throw Error(ErrorCode::kBadMagic, "not a datastore file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kDatastoreVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported datastore version " + std::to_string(version));
  }
  const std::uint32_t kind = r.u32();
  if (kind != static_cast<std::uint32_t>(DatastoreKind::kSentence) &&
      kind != static_cast<std::uint32_t>(DatastoreKind::kToken)) {
    throw Error(ErrorCode::kFormat, "unknown datastore kind " + std::to_string(kind));
  }
  const std::uint32_t dim = r.u32();
  const std::uint64_t count = r.u64();
  if (dim == 0) throw Error(ErrorCode::kFormat, "datastore dimension is zero");
  return {static_cast<DatastoreKind>(kind), dim, static_cast<std::size_t>(count)};
}

// Bytes needed for `count` items of `width` bytes, or throws when the product
// cannot fit in what is left of the file.
std::size_t block_bytes(const ByteReader& r, std::uint64_t count, std::size_t width) {
  if (count > r.remaining() / width) {
    throw Error(ErrorCode::kSizeMismatch, "datastore block larger than the file");
  }
  return static_cast<std::size_t>(count) * width;
}

Matrix read_keys(ByteReader& r, const Header& h) {
  if (h.count > std::numeric_limits<std::size_t>::max() / h.dim) {
    throw Error(ErrorCode::kSizeMismatch, "datastore key block overflows");
  }
  block_bytes(r, static_cast<std::uint64_t>(h.count) * h.dim, 4);
  Matrix keys(h.count, h.dim);
  r.f32_array(keys.data());
  return keys;
}

void write_keys(ByteWriter& w, const Matrix& keys) { w.f32_array(keys.data()); }

std::vector<std::uint64_t> read_offsets(ByteReader& r, std::size_t count,
                                        std::size_t unit, const char* what) {
  block_bytes(r, count + 1, 8);
  std::vector<std::uint64_t> off(count + 1);
  for (auto& o : off) o = r.u64();
  if (off.front() != 0) {
    throw Error(ErrorCode::kFormat, std::string(what) + " offsets do not start at 0");
  }
  for (std::size_t i = 1; i < off.size(); ++i) {
    if (off[i] < off[i - 1]) {
      throw Error(ErrorCode::kFormat, std::string(what) + " offsets are not monotone");
    }
  }
  block_bytes(r, off.back(), unit);
  return off;
}

void expect_end(const ByteReader& r) {
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kSizeMismatch,
                std::to_string(r.remaining()) + " trailing bytes after the last block");
  }
}

}  // namespace

std::string serialize_datastore(const TokenDatastore& store) {
  ByteWriter w;
  write_header(w, DatastoreKind::kToken, store.dim(), store.size());
  write_keys(w, store.index().keys());
  w.u32(static_cast<std::uint32_t>(store.vocab_size()));
  for (TokenId v : store.values()) w.u32(v);
  return std::move(w).take();
}

std::string serialize_datastore(const SentenceDatastore& store) {
  ByteWriter w;
  const auto& entries = store.entries();
  write_header(w, DatastoreKind::kSentence, store.dim(), entries.size());
  write_keys(w, store.index().keys());

  std::uint64_t off = 0;
  w.u64(0);
  for (const auto& e : entries) w.u64(off += e.text.size());
  for (const auto& e : entries) w.bytes(e.text);

  for (const auto& e : entries) w.f64(e.duration_s);

  off = 0;
  w.u64(0);
  for (const auto& e : entries) w.u64(off += e.utterance_id.size());
  for (const auto& e : entries) w.bytes(e.utterance_id);

  off = 0;
  w.u64(0);
  for (const auto& e : entries) w.u64(off += e.tokens.size());
  for (const auto& e : entries) {
    for (TokenId t : e.tokens) w.u32(t);
  }
  return std::move(w).take();
}

DatastoreKind datastore_kind(std::string_view bytes) {
  ByteReader r(bytes);
  return read_header(r).kind;
}

TokenDatastore parse_token_datastore(std::string_view bytes) {
  ByteReader r(bytes);
  const Header h = read_header(r);
  if (h.kind != DatastoreKind::kToken) {
    throw Error(ErrorCode::kFormat, "expected a token datastore, found a sentence datastore");
  }
  const std::size_t expected =
      kHeaderBytes + block_bytes(r, static_cast<std::uint64_t>(h.count) * h.dim, 4) + 4 +
      h.count * 4;
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kSizeMismatch,
                "token datastore is " + std::to_string(bytes.size()) + " bytes, header implies " +
                    std::to_string(expected));
  }
  Matrix keys = read_keys(r, h);
  const std::uint32_t vocab = r.u32();
  std::vector<TokenId> values(h.count);
  for (auto& v : values) v = r.u32();
  expect_end(r);

  TokenDatastore store(h.dim, vocab);
  store.add(keys, values);
  store.freeze();
  return store;
}

SentenceDatastore parse_sentence_datastore(std::string_view bytes) {
  ByteReader r(bytes);
  const Header h = read_header(r);
  if (h.kind != DatastoreKind::kSentence) {
    throw Error(ErrorCode::kFormat, "expected a sentence datastore, found a token datastore");
  }
  const Matrix keys = read_keys(r, h);

  const auto text_off = read_offsets(r, h.count, 1, "transcript");
  const std::string_view text_blob = r.bytes(text_off.back());
  block_bytes(r, h.count, 8);
  std::vector<double> durations(h.count);
  for (auto& d : durations) d = r.f64();
  const auto id_off = read_offsets(r, h.count, 1, "utterance id");
  const std::string_view id_blob = r.bytes(id_off.back());
  const auto tok_off = read_offsets(r, h.count, 4, "token");
  std::vector<TokenId> tokens(tok_off.back());
  for (auto& t : tokens) t = r.u32();
  expect_end(r);

  SentenceDatastore store(h.dim);
  for (std::size_t i = 0; i < h.count; ++i) {
    SentenceEntry e;
    e.text = std::string(text_blob.substr(text_off[i], text_off[i + 1] - text_off[i]));
    e.utterance_id = std::string(id_blob.substr(id_off[i], id_off[i + 1] - id_off[i]));
    e.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(tok_off[i]),
                    tokens.begin() + static_cast<std::ptrdiff_t>(tok_off[i + 1]));
    e.duration_s = durations[i];
    store.add(keys.row(i), std::move(e));
  }
  store.freeze();
  return store;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

void save_datastore(const TokenDatastore& store, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_datastore(store));
}

void save_datastore(const SentenceDatastore& store, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_datastore(store));
}

TokenDatastore load_token_datastore(const std::filesystem::path& path) {
  return parse_token_datastore(read_file_bytes(path));
}

SentenceDatastore load_sentence_datastore(const std::filesystem::path& path) {
  return parse_sentence_datastore(read_file_bytes(path));
}

}  // namespace m2r
