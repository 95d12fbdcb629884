#include "m2r/sentence_icl.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace m2r;
using namespace m2r::testing;

namespace {

// Neumaier-compensated column sums in long double.
std::vector<double> compensated_mean(const Matrix& m) {
  std::vector<double> out(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    long double sum = 0.0L, comp = 0.0L;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const long double x = m.row(r)[c];
      const long double t = sum + x;
      comp += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
      sum = t;
    }
    out[c] = static_cast<double>((sum + comp) / m.rows());
  }
  return out;
}

SentenceEntry entry(std::string id, double duration, TokenSeq tokens = {2}) {
  return {std::move(id), std::move(tokens), "", duration};
}

std::vector<std::string> ids(const std::vector<SentenceEntry>& es) {
  std::vector<std::string> out;
  for (const auto& e : es) out.push_back(e.utterance_id);
  return out;
}

}  // namespace

TEST(PoolMean, TwoPointMean) {
  const auto m = pool_mean(Matrix(2, 2, {1, 1, 3, 3}));
  EXPECT_EQ(m, (std::vector<float>{2, 2}));
}

TEST(PoolMean, SingleFrameIsIdentity) {
  const Matrix one = random_matrix(1, 5, 1);
  EXPECT_EQ(pool_mean(one), one.data());
}

TEST(PoolMean, MatchesCompensatedSummation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix frames = random_matrix(100, 16, seed, -100.0f, 100.0f);
    const auto got = pool_mean(frames);
    const auto want = compensated_mean(frames);
    for (std::size_t c = 0; c < got.size(); ++c) EXPECT_NEAR(got[c], want[c], 1e-6);
  }
}

TEST(PoolMean, EmptyIsAnError) {
  EXPECT_M2R_ERROR(pool_mean(Matrix(0, 3)), ErrorCode::kEmptyInput);
}

TEST(PoolEncoded, UsesOnlyValidFrames) {
  EncodeResult enc{"u", Matrix(3, 1, {1, 3, 100}), 2};
  EXPECT_EQ(pool_encoded(enc), std::vector<float>{2});
}

TEST(BuildSentenceDatastore, EachKeySelfRetrievesAtRankOne) {
  const ToyModel model(clean_config());
  const Corpus corpus = make_corpus(model, 5, 6, 4);
  const auto built = build_sentence_datastore(model, corpus);
  ASSERT_EQ(built.store.size(), 5u);
  for (const auto& u : corpus) {
    const auto top = retrieve_prompts(built.store, model, u.audio, 1);
    ASSERT_EQ(top.size(), 1u);
    EXPECT_EQ(top[0].utterance_id, u.id);
  }
  EXPECT_EQ(built.store.entries()[2].tokens, corpus[2].tokens);
  EXPECT_DOUBLE_EQ(built.store.entries()[2].duration_s, corpus[2].audio.duration_s());
}

TEST(BuildSentenceDatastore, IdenticalAudioGivesEqualKeys) {
  const ToyModel model(clean_config());
  Corpus corpus = make_corpus(model, 2, 6, 5);
  corpus[1].audio.frames = corpus[0].audio.frames;
  const auto built = build_sentence_datastore(model, corpus);
  EXPECT_TRUE(std::equal(built.store.index().keys().row(0).begin(),
                         built.store.index().keys().row(0).end(),
                         built.store.index().keys().row(1).begin()));
}

TEST(BuildSentenceDatastore, EmptyCorpusIsAnError) {
  const ToyModel model(clean_config());
  EXPECT_M2R_ERROR(build_sentence_datastore(model, {}), ErrorCode::kEmptyInput);
}

TEST(BuildSentenceDatastore, SkipsFailingUtterances) {
  const ToyModel model(clean_config());
  Corpus corpus = make_corpus(model, 3, 4, 6);
  corpus[0].audio.frames = Matrix(0, 8);
  EXPECT_M2R_ERROR(build_sentence_datastore(model, corpus, OnError::kAbort),
                   ErrorCode::kEmptyInput);
  const auto built = build_sentence_datastore(model, corpus, OnError::kSkip);
  EXPECT_EQ(built.store.size(), 2u);
  ASSERT_EQ(built.skipped.size(), 1u);
  EXPECT_EQ(built.skipped[0].utterance_id, corpus[0].id);
}

TEST(RetrievePrompts, ExclusionRemovesTheQueryUtterance) {
  const ToyModel model(clean_config());
  const Corpus corpus = make_corpus(model, 5, 6, 7);
  const auto store = build_sentence_datastore(model, corpus).store;
  const auto with = retrieve_prompts(store, model, corpus[3].audio, 16);
  EXPECT_EQ(with.size(), 5u);
  EXPECT_EQ(with.front().utterance_id, corpus[3].id);
  const auto without = retrieve_prompts(store, model, corpus[3].audio, 16, corpus[3].id);
  EXPECT_EQ(without.size(), 4u);
  for (const auto& e : without) EXPECT_NE(e.utterance_id, corpus[3].id);
  const auto top2 = retrieve_prompts(store, model, corpus[3].audio, 2, corpus[3].id);
  EXPECT_EQ(ids(top2), (std::vector<std::string>{with[1].utterance_id, with[2].utterance_id}));
}

TEST(RetrievePrompts, EmptyStoreIsAnError) {
  const ToyModel model(clean_config());
  const SentenceDatastore store(8);
  const Corpus corpus = make_corpus(model, 1, 3, 8);
  EXPECT_M2R_ERROR(retrieve_prompts(store, model, corpus[0].audio, 4), ErrorCode::kEmptyIndex);
}

TEST(PackPrompts, SkipsWhatDoesNotFitAndContinues) {
  const std::vector<SentenceEntry> c{entry("a", 20), entry("b", 15), entry("c", 5)};
  const auto plan = pack_prompts(c, 8, 30, 10);
  EXPECT_EQ(ids(plan.prompts), std::vector<std::string>{"a"});
  EXPECT_DOUBLE_EQ(plan.total_prompt_duration_s, 20.0);

  const std::vector<SentenceEntry> d{entry("a", 20), entry("b", 15), entry("c", 2)};
  EXPECT_EQ(ids(pack_prompts(d, 8, 30, 10).prompts), (std::vector<std::string>{"a", "c"}));
}

TEST(PackPrompts, CappedAtTenPrompts) {
  std::vector<SentenceEntry> c;
  for (int i = 0; i < 12; ++i) c.push_back(entry("p" + std::to_string(i), 1.0));
  const auto plan = pack_prompts(c, 5, 30, 10);
  ASSERT_EQ(plan.prompts.size(), 10u);
  EXPECT_EQ(plan.prompts.back().utterance_id, "p9");
}

TEST(PackPrompts, EmptyCandidatesGiveEmptyPlan) {
  const auto plan = pack_prompts({}, 5, 30, 10);
  EXPECT_TRUE(plan.prompts.empty());
  EXPECT_TRUE(plan.prefix_tokens.empty());
  EXPECT_EQ(plan.total_prompt_duration_s, 0.0);
}

TEST(PackPrompts, PrefixConcatenatesTranscriptsInOrder) {
  const std::vector<SentenceEntry> c{entry("a", 1, {5, 6}), entry("b", 1, {7})};
  EXPECT_EQ(pack_prompts(c, 1, 30, 10).prefix_tokens, (TokenSeq{5, 6, 7}));
}

TEST(PackPrompts, TestLongerThanBudgetIsAnError) {
  EXPECT_M2R_ERROR(pack_prompts({}, 31, 30, 10), ErrorCode::kBudgetExceeded);
}

TEST(PackPrompts, RandomInstancesRespectCapAndBudget) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> dur(0.2, 12.0);
  std::uniform_real_distribution<double> test_dur(0.5, 30.0);
  std::uniform_int_distribution<int> count(0, 25);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<SentenceEntry> c;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) c.push_back(entry(std::to_string(i), dur(rng)));
    const double t = test_dur(rng);
    const auto plan = pack_prompts(c, t, 30.0, 10);
    ASSERT_LE(plan.prompts.size(), 10u);
    double sum = 0.0;
    for (const auto& p : plan.prompts) sum += p.duration_s;
    ASSERT_LE(sum + t, 30.0);
    ASSERT_DOUBLE_EQ(sum, plan.total_prompt_duration_s);
  }
}
