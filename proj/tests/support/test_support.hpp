#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "m2r/errors.hpp"
#include "m2r/synthetic.hpp"
#include "m2r/toy_model.hpp"
#include "m2r/types.hpp"

namespace m2r::testing {

#define EXPECT_M2R_ERROR(stmt, expected_code)                          \
  do {                                                                 \
    try {                                                              \
      stmt;                                                            \
      ADD_FAILURE() << "expected m2r::Error from: " #stmt;             \
    } catch (const ::m2r::Error& e) {                                  \
      EXPECT_EQ(e.code(), expected_code) << e.what();                  \
    }                                                                  \
  } while (0)

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            float lo = -1.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  Matrix m(rows, cols);
  for (float& v : m.data()) v = dist(rng);
  return m;
}

// Noiseless toy model with an identity confusion.
inline ToyModelConfig clean_config(std::size_t vocab = 16, std::size_t dim = 8) {
  ToyModelConfig c;
  c.vocab_size = vocab;
  c.embed_dim = dim;
  return c;
}

// Utterances with tokens drawn uniformly from the content range, no repeats.
inline Corpus make_corpus(const ToyModel& model, std::size_t count, std::size_t len,
                          std::uint64_t seed, const std::string& prefix = "utt",
                          double acoustic_sigma = 0.05) {
  std::mt19937_64 rng(seed);
  const auto vocab = static_cast<TokenId>(model.info().vocab_size);
  std::uniform_int_distribution<TokenId> tok(kToyFirstContentToken, vocab - 1);
  Corpus out;
  for (std::size_t i = 0; i < count; ++i) {
    Utterance u;
    u.id = prefix + "-" + std::to_string(i);
    while (u.tokens.size() < len) {
      const TokenId t = tok(rng);
      if (!u.tokens.empty() && u.tokens.back() == t) continue;
      u.tokens.push_back(t);
    }
    u.text = tokens_to_text(u.tokens);
    u.audio = model.synthesize(u.tokens, u.id, acoustic_sigma, seed * 1000 + i);
    out.push_back(std::move(u));
  }
  return out;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("m2r-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace m2r::testing
