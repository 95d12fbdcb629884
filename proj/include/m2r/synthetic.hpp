#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "m2r/model.hpp"
#include "m2r/toy_model.hpp"

namespace m2r {

struct Utterance {
  std::string id;
  AudioSegment audio;
  TokenSeq tokens;  // content tokens only, no start/end markers
  std::string text;
};

using Corpus = std::vector<Utterance>;

// Display text for a token sequence without an orthography ("12 7 40").
std::string tokens_to_text(std::span<const TokenId> tokens);

struct SyntheticSpec {
  std::uint64_t seed = 20240917;
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  std::size_t n_topics = 16;
  std::size_t pairs_per_topic = 3;    // topics containing both halves of a pair
  std::size_t singles_per_topic = 4;  // topics containing one half only
  std::size_t min_len = 6;
  std::size_t max_len = 14;
  double acoustic_sigma = 0.1;

  std::size_t vocab_size = 64;
  std::size_t embed_dim = 32;
  double frame_duration_s = 0.02;
  double confusion_mass = 0.15;
  double del_rate = 0.03;
  double ins_rate = 0.03;
  double noise_sigma = 0.3;
  double prefix_bias_beta = 6.0;
};

struct SyntheticBenchmark {
  ToyModelConfig model_config;
  Corpus train;
  Corpus test;
  std::vector<std::vector<TokenId>> topics;
};

/// Seeded topic-structured benchmark.
///
/// Content tokens are grouped into confusable pairs (2,3), (4,5), ... and the
/// confusion matrix moves `confusion_mass` of each row to the partner. Each
/// topic draws a small token set; utterances sample their tokens from one
/// topic with no immediate repeats, so sentence embeddings cluster by topic.
/// Train and test utterances are generated independently from the same
/// topics.
SyntheticBenchmark make_synthetic_benchmark(const SyntheticSpec& spec);

}  // namespace m2r
