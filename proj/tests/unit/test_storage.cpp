#include "m2r/storage.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "test_support.hpp"

using namespace m2r;
using namespace m2r::testing;

namespace {

TokenDatastore random_token_store(std::size_t count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<TokenId> tok(0, 99);
  std::vector<TokenId> values(count);
  for (auto& v : values) v = tok(rng);
  TokenDatastore s(dim, 100);
  s.add(random_matrix(count, dim, seed), values);
  s.freeze();
  return s;
}

SentenceDatastore small_sentence_store() {
  SentenceDatastore s(3);
  s.add(std::vector<float>{1, 2, 3}, {"utt-a", {2, 3, 4}, "\xE4\xBD\xA0\xE5\xA5\xBD", 1.25});
  s.add(std::vector<float>{-1, 0.5f, 0}, {"utt-bb", {7}, "", 0.5});
  s.add(std::vector<float>{0, 0, 0}, {"", {9, 9}, "x", 3.0});
  s.freeze();
  return s;
}

std::uint32_t u32_at(const std::string& b, std::size_t off) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[off])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 3])) << 24;
}

}  // namespace

TEST(DatastoreFile, HeaderLayoutIsLittleEndian) {
  const std::string bytes = serialize_datastore(random_token_store(3, 2, 1));
  EXPECT_EQ(bytes.substr(0, 4), "M2RD");
  EXPECT_EQ(u32_at(bytes, 4), 1u);
  EXPECT_EQ(u32_at(bytes, 8), 2u);
  EXPECT_EQ(u32_at(bytes, 12), 2u);
  EXPECT_EQ(u32_at(bytes, 16), 3u);
  EXPECT_EQ(u32_at(bytes, 20), 0u);
  EXPECT_EQ(bytes.size(), 24u + 3 * 2 * 4 + 4 + 3 * 4);
  float first = 0;
  const std::uint32_t raw = u32_at(bytes, 24);
  std::memcpy(&first, &raw, 4);
  EXPECT_EQ(first, random_token_store(3, 2, 1).index().keys().row(0)[0]);
}

TEST(DatastoreFile, TokenRoundTripIsBitIdentical) {
  for (std::size_t count : {0u, 1u, 10000u}) {
    const auto store = random_token_store(count, 16, count + 7);
    const std::string bytes = serialize_datastore(store);
    const auto loaded = parse_token_datastore(bytes);
    EXPECT_EQ(loaded.size(), count);
    EXPECT_EQ(loaded.index().keys().data(), store.index().keys().data());
    EXPECT_EQ(loaded.values(), store.values());
    EXPECT_EQ(loaded.vocab_size(), 100u);
    EXPECT_EQ(serialize_datastore(loaded), bytes) << "count " << count;
  }
}

TEST(DatastoreFile, LoadedStoreAnswersQueriesIdentically) {
  const auto store = random_token_store(1000, 8, 3);
  const auto loaded = parse_token_datastore(serialize_datastore(store));
  const Matrix queries = random_matrix(100, 8, 4);
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const auto a = store.index().query_topk(queries.row(q), 16);
    const auto b = loaded.index().query_topk(queries.row(q), 16);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].id, b[i].id);
      EXPECT_EQ(a[i].distance, b[i].distance);
    }
  }
}

TEST(DatastoreFile, SentenceRoundTripIsBitIdentical) {
  const auto store = small_sentence_store();
  const std::string bytes = serialize_datastore(store);
  const auto loaded = parse_sentence_datastore(bytes);
  EXPECT_EQ(loaded.entries(), store.entries());
  EXPECT_EQ(loaded.index().keys(), store.index().keys());
  EXPECT_EQ(serialize_datastore(loaded), bytes);
  EXPECT_EQ(datastore_kind(bytes), DatastoreKind::kSentence);
}

TEST(DatastoreFile, SentenceStoreFromToyCorpusRoundTrips) {
  const ToyModel model(clean_config());
  const auto store = build_sentence_datastore(model, make_corpus(model, 200, 9, 8)).store;
  const std::string bytes = serialize_datastore(store);
  EXPECT_EQ(serialize_datastore(parse_sentence_datastore(bytes)), bytes);
}

TEST(DatastoreFile, EmptyStoresAreValid) {
  SentenceDatastore empty(4);
  empty.freeze();
  const auto loaded = parse_sentence_datastore(serialize_datastore(empty));
  EXPECT_EQ(loaded.size(), 0u);
  EXPECT_EQ(loaded.dim(), 4u);
  EXPECT_EQ(serialize_datastore(loaded), serialize_datastore(empty));
}

TEST(DatastoreFile, EveryTruncationIsASizeMismatch) {
  for (const std::string& bytes :
       {serialize_datastore(random_token_store(5, 3, 2)),
        serialize_datastore(small_sentence_store())}) {
    const bool token = datastore_kind(bytes) == DatastoreKind::kToken;
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
      const std::string_view part(bytes.data(), cut);
      if (token) {
        EXPECT_M2R_ERROR(parse_token_datastore(part), ErrorCode::kSizeMismatch);
      } else {
        EXPECT_M2R_ERROR(parse_sentence_datastore(part), ErrorCode::kSizeMismatch);
      }
    }
  }
}

TEST(DatastoreFile, TrailingBytesAreASizeMismatch) {
  std::string bytes = serialize_datastore(small_sentence_store());
  bytes.push_back('\0');
  EXPECT_M2R_ERROR(parse_sentence_datastore(bytes), ErrorCode::kSizeMismatch);
  std::string token = serialize_datastore(random_token_store(2, 2, 1));
  token += "xxxx";
  EXPECT_M2R_ERROR(parse_token_datastore(token), ErrorCode::kSizeMismatch);
}

TEST(DatastoreFile, DistinctHeaderErrors) {
  const std::string good = serialize_datastore(random_token_store(2, 2, 1));
  std::string magic = good;
  magic[0] = 'X';
  EXPECT_M2R_ERROR(parse_token_datastore(magic), ErrorCode::kBadMagic);
  std::string version = good;
  version[4] = 2;
  EXPECT_M2R_ERROR(parse_token_datastore(version), ErrorCode::kUnsupportedVersion);
  EXPECT_M2R_ERROR(parse_sentence_datastore(good), ErrorCode::kFormat);
  std::string huge = good;
  huge[23] = '\x7f';
  EXPECT_M2R_ERROR(parse_token_datastore(huge), ErrorCode::kSizeMismatch);
}

TEST(DatastoreFile, CorruptOffsetsAreRejected) {
  std::string bytes = serialize_datastore(small_sentence_store());
  // First text offset follows the 24-byte header and 3x3 f32 keys.
  bytes[24 + 36] = 1;
  EXPECT_M2R_ERROR(parse_sentence_datastore(bytes), ErrorCode::kFormat);
}

TEST(DatastoreFile, SaveAndLoadThroughFiles) {
  TempDir dir;
  const auto store = random_token_store(50, 4, 9);
  save_datastore(store, dir / "t.m2rd");
  EXPECT_EQ(read_file_bytes(dir / "t.m2rd"), serialize_datastore(store));
  EXPECT_EQ(load_token_datastore(dir / "t.m2rd").values(), store.values());
  EXPECT_M2R_ERROR(load_token_datastore(dir / "missing.m2rd"), ErrorCode::kIo);
}
