#include "m2r/exports.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "m2r/byte_io.hpp"
#include "m2r/storage.hpp"
#include "m2r/token_knn.hpp"
#include "test_support.hpp"

using namespace m2r;
using namespace m2r::testing;

namespace {

std::string to_bytes(const std::vector<UtteranceExport>& records) {
  std::ostringstream out;
  write_exports(out, records);
  return out.str();
}

// A record assembled byte by byte, the way an external exporter would.
std::string hand_record(const std::string& header, const std::vector<float>& payload) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.bytes(header);
  w.u64(payload.size() * 4);
  w.f32_array(payload);
  return std::move(w).take();
}

const std::string kStreamHead = std::string("M2RX") + std::string("\x01\x00\x00\x00", 4);

}  // namespace

TEST(Exports, ToyExportReimportsToIdenticalDatastores) {
  ToyModelConfig cfg = clean_config();
  cfg.noise_sigma = 0.3;
  cfg.rng_seed = 5;
  const ToyModel model(cfg);
  const Corpus corpus = make_corpus(model, 25, 7, 3);
  std::vector<UtteranceExport> records;
  for (const auto& u : corpus) records.push_back(export_utterance(model, u));

  const auto imported = import_exports(read_exports(to_bytes(records)));
  ASSERT_EQ(imported.corpus.size(), corpus.size());
  EXPECT_EQ(imported.corpus[4].tokens, corpus[4].tokens);
  EXPECT_EQ(imported.corpus[4].text, corpus[4].text);

  const auto direct_tokens = build_token_datastore(model, corpus).store;
  const auto replay_tokens = build_token_datastore(*imported.model, imported.corpus).store;
  EXPECT_EQ(serialize_datastore(replay_tokens), serialize_datastore(direct_tokens));

  const auto direct_sent = build_sentence_datastore(model, corpus).store;
  const auto replay_sent = build_sentence_datastore(*imported.model, imported.corpus).store;
  EXPECT_EQ(serialize_datastore(replay_sent), serialize_datastore(direct_sent));
}

TEST(Exports, WritingIsDeterministic) {
  const ToyModel model(clean_config());
  const Corpus corpus = make_corpus(model, 3, 4, 2);
  std::vector<UtteranceExport> a, b;
  for (const auto& u : corpus) {
    a.push_back(export_utterance(model, u));
    b.push_back(export_utterance(model, u));
  }
  EXPECT_EQ(to_bytes(a), to_bytes(b));
}

TEST(Exports, RecordsWithoutLogitsRoundTrip) {
  const ToyModel model(clean_config());
  const auto rec = export_utterance(model, make_corpus(model, 1, 3, 1)[0], false);
  EXPECT_FALSE(rec.has_logits());
  const auto back = read_exports(to_bytes({rec}));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].taps, rec.taps);
  EXPECT_TRUE(back[0].logits.empty());
}

TEST(Exports, HandCraftedStreamImports) {
  const std::string header =
      R"({"utterance_id":"hand-1","text":"hi","transcript":[3,1],"n_frames":1,)"
      R"("frame_dim":2,"steps":2,"tap_dim":2,"vocab_size":4,"has_logits":false,)"
      R"("frame_duration_s":0.02,"start_id":0,"eos_id":1})"
      "\n";
  const std::string bytes = kStreamHead + hand_record(header, {0.5f, -1, 1, 2, 3, 4});
  const auto imported = import_exports(read_exports(bytes));
  ASSERT_EQ(imported.corpus.size(), 1u);
  const auto& u = imported.corpus[0];
  EXPECT_EQ(u.id, "hand-1");
  EXPECT_EQ(u.tokens, TokenSeq{3});
  EXPECT_EQ(u.audio.frames, Matrix(1, 2, {0.5f, -1}));
  const auto info = imported.model->info();
  EXPECT_EQ(info.vocab_size, 4u);
  EXPECT_EQ(info.tap_dim, 2u);
  const auto store = build_token_datastore(*imported.model, imported.corpus).store;
  EXPECT_EQ(store.values(), (std::vector<TokenId>{3, 1}));
  EXPECT_EQ(store.index().keys(), Matrix(2, 2, {1, 2, 3, 4}));
}

TEST(Exports, StepCountMustMatchTranscript) {
  const std::string header =
      R"({"utterance_id":"bad","text":"","transcript":[3,1],"n_frames":1,"frame_dim":1,)"
      R"("steps":3,"tap_dim":1,"vocab_size":4,"has_logits":false,"frame_duration_s":0.02,)"
      R"("start_id":0,"eos_id":1})";
  const std::string bytes = kStreamHead + hand_record(header, {0, 1, 2, 3});
  EXPECT_M2R_ERROR(read_exports(bytes), ErrorCode::kLengthMismatch);
}

TEST(Exports, InconsistentDimensionsNameBothRecords) {
  const ToyModel narrow(clean_config(16, 4));
  const ToyModel wide(clean_config(16, 6));
  std::vector<UtteranceExport> records{
      export_utterance(narrow, make_corpus(narrow, 1, 3, 1, "first")[0]),
      export_utterance(wide, make_corpus(wide, 1, 3, 2, "second")[0])};
  try {
    read_exports(to_bytes(records));
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("first-0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("second-0"), std::string::npos) << msg;
  }
}

TEST(Exports, EmptyStreamGivesEmptyCorpus) {
  const auto imported = import_exports(read_exports(std::string_view{}));
  EXPECT_TRUE(imported.corpus.empty());
  EXPECT_M2R_ERROR(build_token_datastore(*imported.model, imported.corpus), ErrorCode::kEmptyInput);
  EXPECT_TRUE(read_exports(kStreamHead).empty());
}

TEST(Exports, StreamErrors) {
  EXPECT_M2R_ERROR(read_exports(std::string("M2RD\x01\x00\x00\x00", 8)), ErrorCode::kBadMagic);
  EXPECT_M2R_ERROR(read_exports(std::string("M2RX\x07\x00\x00\x00", 8)),
                   ErrorCode::kUnsupportedVersion);
  const ToyModel model(clean_config());
  const std::string good = to_bytes({export_utterance(model, make_corpus(model, 1, 3, 1)[0])});
  EXPECT_M2R_ERROR(read_exports(good.substr(0, good.size() - 1)), ErrorCode::kSizeMismatch);
  EXPECT_M2R_ERROR(read_exports(kStreamHead + hand_record("{not json", {})), ErrorCode::kFormat);
  EXPECT_M2R_ERROR(read_exports(kStreamHead + hand_record(R"({"utterance_id":"x"})", {})),
                   ErrorCode::kFormat);
  const auto rec = export_utterance(model, make_corpus(model, 1, 3, 1)[0]);
  EXPECT_M2R_ERROR(read_exports(to_bytes({rec, rec})), ErrorCode::kFormat);
}

TEST(ReplayModel, ReplaysStoredTensorsOnly) {
  const ToyModel model(clean_config());
  const Corpus corpus = make_corpus(model, 2, 3, 4);
  std::vector<UtteranceExport> records;
  for (const auto& u : corpus) records.push_back(export_utterance(model, u));
  const ReplayModel replay(records);
  const auto enc = replay.encode(corpus[1].audio);
  EXPECT_EQ(enc.frame_embeddings, corpus[1].audio.frames);
  const auto target = target_sequence(corpus[1].tokens, kToyEosToken);
  const auto steps = replay.teacher_force(enc, target);
  ASSERT_EQ(steps.size(), target.size());
  EXPECT_EQ(steps[0].logits, model.teacher_force(model.encode(corpus[1].audio), target)[0].logits);
  EXPECT_M2R_ERROR(replay.decode_step(enc, TokenSeq{0}, 0), ErrorCode::kModelFailure);
  EXPECT_M2R_ERROR(replay.teacher_force(enc, corpus[1].tokens), ErrorCode::kLengthMismatch);
  EXPECT_M2R_ERROR(replay.encode({"unknown", Matrix(1, 8)}), ErrorCode::kModelFailure);
}

TEST(Exports, FileRoundTrip) {
  TempDir dir;
  const ToyModel model(clean_config());
  std::vector<UtteranceExport> records;
  for (const auto& u : make_corpus(model, 3, 5, 6)) records.push_back(export_utterance(model, u));
  write_exports(dir / "x.m2rx", records);
  EXPECT_EQ(import_exports(dir / "x.m2rx").corpus.size(), 3u);
  EXPECT_M2R_ERROR(load_exports(dir / "none.m2rx"), ErrorCode::kIo);
}
