#include "m2r/metrics.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <sstream>

#include "m2r/normalize.hpp"
#include "test_support.hpp"

using namespace m2r;

namespace {

SymbolSeq syms(std::string_view letters) {
  SymbolSeq out;
  for (char c : letters) {
    if (c != ' ') out.push_back(static_cast<Symbol>(c));
  }
  return out;
}

// Two-row edit distance.
std::size_t edit_distance(const SymbolSeq& a, const SymbolSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] != b[j - 1]), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Top-down memoized cost with a recursive backtrace that prefers the
// diagonal, then a reference-only step, then a hypothesis-only step.
ErrorCounts recursive_align(const SymbolSeq& ref, const SymbolSeq& hyp) {
  const std::size_t w = hyp.size() + 1;
  std::vector<int> memo((ref.size() + 1) * w, -1);
  std::function<int(std::size_t, std::size_t)> cost = [&](std::size_t i, std::size_t j) {
    if (i == 0) return static_cast<int>(j);
    if (j == 0) return static_cast<int>(i);
    int& m = memo[i * w + j];
    if (m < 0) {
      m = std::min({cost(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1] ? 1 : 0), cost(i - 1, j) + 1,
                    cost(i, j - 1) + 1});
    }
    return m;
  };
  ErrorCounts c;
  c.ref_len = ref.size();
  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t j) {
    if (i == 0 && j == 0) return;
    const int here = cost(i, j);
    if (i > 0 && j > 0) {
      const int sub = ref[i - 1] != hyp[j - 1] ? 1 : 0;
      if (cost(i - 1, j - 1) + sub == here) {
        c.substitutions += sub;
        return walk(i - 1, j - 1);
      }
    }
    if (i > 0 && cost(i - 1, j) + 1 == here) {
      ++c.deletions;
      return walk(i - 1, j);
    }
    ++c.insertions;
    walk(i, j - 1);
  };
  walk(ref.size(), hyp.size());
  return c;
}

DecodeResult result(std::string id, SymbolSeq hyp, double wall = 0, double audio = 1) {
  DecodeResult r;
  r.utterance_id = std::move(id);
  r.hypothesis.assign(hyp.begin(), hyp.end());
  r.wall_time_s = wall;
  r.audio_duration_s = audio;
  return r;
}

}  // namespace

TEST(Levenshtein, IdenticalSequencesHaveNoErrors) {
  EXPECT_EQ(levenshtein_align(syms("abc"), syms("abc")), (ErrorCounts{0, 0, 0, 3}));
}

TEST(Levenshtein, SingleSubstitution) {
  EXPECT_EQ(levenshtein_align(syms("a b c"), syms("a x c")), (ErrorCounts{1, 0, 0, 3}));
}

TEST(Levenshtein, SingleInsertion) {
  EXPECT_EQ(levenshtein_align(syms("a b"), syms("a b c")), (ErrorCounts{0, 0, 1, 2}));
}

TEST(Levenshtein, EmptyHypothesisIsAllDeletions) {
  EXPECT_EQ(levenshtein_align(syms("abc"), {}), (ErrorCounts{0, 3, 0, 3}));
}

TEST(Levenshtein, TieRulePrefersDiagonal) {
  // "ab" -> "bc" costs 2 either as two substitutions or one deletion plus one
  // insertion; the diagonal-first backtrace reports substitutions.
  EXPECT_EQ(levenshtein_align(syms("ab"), syms("bc")), (ErrorCounts{2, 0, 0, 2}));
}

TEST(Levenshtein, EmptyReferenceIsAnError) {
  EXPECT_M2R_ERROR(levenshtein_align({}, syms("a")), ErrorCode::kEmptyInput);
}

TEST(Levenshtein, AgreesWithIndependentImplementations) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> len(1, 30);
  std::uniform_int_distribution<std::size_t> hyp_len(0, 30);
  std::uniform_int_distribution<Symbol> sym(0, 4);
  for (int trial = 0; trial < 10000; ++trial) {
    SymbolSeq ref(len(rng)), hyp(hyp_len(rng));
    for (auto& s : ref) s = sym(rng);
    for (auto& s : hyp) s = sym(rng);
    const ErrorCounts got = levenshtein_align(ref, hyp);
    ASSERT_EQ(got.errors(), edit_distance(ref, hyp)) << "trial " << trial;
    ASSERT_EQ(got, recursive_align(ref, hyp)) << "trial " << trial;
    ASSERT_EQ(got.ref_len, ref.size());
    ASSERT_EQ(ref.size() - got.deletions + got.insertions, hyp.size());
  }
}

TEST(Cer, Arithmetic) {
  EXPECT_NEAR(cer({1, 0, 0, 3}), 33.33, 0.005);
  EXPECT_EQ(cer({0, 0, 0, 3}), 0.0);
  EXPECT_EQ(cer({0, 3, 0, 3}), 100.0);
  EXPECT_M2R_ERROR(cer({0, 0, 0, 0}), ErrorCode::kInvalidArgument);
}

TEST(RelativeReduction, PublishedTableValues) {
  EXPECT_NEAR(relative_reduction(31.31, 28.61), 8.62, 0.01);
  EXPECT_NEAR(relative_reduction(31.31, 24.11), 22.99, 0.01);
  EXPECT_EQ(relative_reduction(12.5, 12.5), 0.0);
  EXPECT_LT(relative_reduction(10.0, 11.0), 0.0);
  EXPECT_M2R_ERROR(relative_reduction(0.0, 1.0), ErrorCode::kInvalidArgument);
}

TEST(BuildReport, CorpusLevelAggregation) {
  References refs{{"u1", syms("abcd")}, {"u2", syms("abcdef")}};
  const std::vector<DecodeResult> results{result("u1", syms("xbcd")),
                                          result("u2", syms("bcdefg"))};
  const auto report = build_report(results, refs, Normalizer{});
  EXPECT_EQ(report.per_utterance[0].counts, (ErrorCounts{1, 0, 0, 4}));
  EXPECT_EQ(report.per_utterance[1].counts, (ErrorCounts{0, 1, 1, 6}));
  EXPECT_DOUBLE_EQ(report.aggregate_cer, 30.0);
}

TEST(BuildReport, SingleExactMatch) {
  References refs{{"u", syms("abc")}};
  const auto report = build_report(std::vector{result("u", syms("abc"))}, refs, Normalizer{});
  EXPECT_EQ(report.aggregate_cer, 0.0);
}

TEST(BuildReport, RealTimeFactor) {
  References refs{{"a", syms("x")}, {"b", syms("y")}};
  const std::vector<DecodeResult> results{result("a", syms("x"), 2.0, 10.0),
                                          result("b", syms("y"), 2.0, 10.0)};
  EXPECT_DOUBLE_EQ(build_report(results, refs, Normalizer{}).rtf, 0.2);
}

TEST(BuildReport, MissingReferenceNamesTheUtterance) {
  References refs{{"a", syms("x")}};
  try {
    build_report(std::vector{result("zz", syms("x"))}, refs, Normalizer{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingReference);
    EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
  }
}

TEST(BuildReport, NormalizesBothSides) {
  MappingTable t;
  t.set('X', {'Y'});
  Normalizer n;
  n.add_table(t);
  References refs{{"u", syms("aY")}};
  EXPECT_EQ(build_report(std::vector{result("u", syms("aX"))}, refs, n).aggregate_cer, 0.0);
}

TEST(ReportCsv, RowsAndTotal) {
  References refs{{"u1", syms("abcd")}, {"u2", syms("abcdef")}};
  const auto report = build_report(
      std::vector{result("u1", syms("xbcd"), 0.5, 1.0), result("u2", syms("bcdefg"), 0.5, 1.0)},
      refs, Normalizer{});
  std::ostringstream timed, untimed;
  write_report_csv(timed, report);
  write_report_csv(untimed, report, {false});
  EXPECT_EQ(untimed.str(),
            "utterance_id,ref_len,S,D,I,cer,wall_time_s,audio_s\n"
            "u1,4,1,0,0,25.0000,0.000000,1.0000\n"
            "u2,6,0,1,1,33.3333,0.000000,1.0000\n"
            "TOTAL,10,1,1,1,30.0000,0.000000,2.0000\n");
  EXPECT_NE(timed.str().find("TOTAL,10,1,1,1,30.0000,1.000000,2.0000"), std::string::npos);
}

TEST(Normalizer, NoTablesIsIdentity) {
  EXPECT_EQ(Normalizer{}.apply_text("abc 123"), "abc 123");
}

TEST(Normalizer, SingleTableMapsEveryOccurrence) {
  std::istringstream in("X\tY\n");
  Normalizer n;
  n.add_table(MappingTable::parse(in));
  EXPECT_EQ(n.apply_text("X a X"), "Y a Y");
}

TEST(Normalizer, ChainEqualsSequentialApplication) {
  std::istringstream variants("# traditional to simplified\n\xE8\xAA\xAA\t\xE8\xAF\xB4\n\n");
  std::istringstream digits("1\t\xE4\xB8\x80\n2\t\xE4\xBA\x8C\n\xE8\xAF\xB4\t\n");
  const auto a = MappingTable::parse(variants);
  const auto b = MappingTable::parse(digits);
  Normalizer chain;
  chain.add_table(a);
  chain.add_table(b);
  std::mt19937_64 rng(1);
  const std::vector<Symbol> alphabet{'1', '2', 'x', 0x8AAA, 0x8BF4};
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    SymbolSeq s(trial % 12);
    for (auto& x : s) x = alphabet[pick(rng)];
    EXPECT_EQ(chain.apply(s), b.apply(a.apply(s)));
  }
  // The traditional form maps to the simplified one, which the second table
  // then deletes.
  EXPECT_EQ(chain.apply_text("\xE8\xAA\xAA" "12"), "\xE4\xB8\x80\xE4\xBA\x8C");
}

TEST(Normalizer, MalformedTablesAreRejected) {
  std::istringstream no_tab("ab\n");
  EXPECT_M2R_ERROR(MappingTable::parse(no_tab), ErrorCode::kFormat);
  std::istringstream multi("ab\tc\n");
  EXPECT_M2R_ERROR(MappingTable::parse(multi), ErrorCode::kFormat);
  std::istringstream dup("a\tb\na\tc\n");
  EXPECT_M2R_ERROR(MappingTable::parse(dup), ErrorCode::kFormat);
  std::istringstream bad_utf8("\xC3\tb\n");
  EXPECT_M2R_ERROR(MappingTable::parse(bad_utf8), ErrorCode::kFormat);
  EXPECT_M2R_ERROR(MappingTable::load("/nonexistent/table.tsv"), ErrorCode::kIo);
}

TEST(Utf8, RoundTrip) {
  const std::string text = "a\xC3\xA9\xE4\xB8\x80\xF0\x9F\x98\x80";
  const auto s = utf8_decode(text);
  EXPECT_EQ(s, (SymbolSeq{'a', 0xE9, 0x4E00, 0x1F600}));
  EXPECT_EQ(utf8_encode(s), text);
}
