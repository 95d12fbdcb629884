#include "m2r/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "m2r/errors.hpp"

namespace m2r {

std::string tokens_to_text(std::span<const TokenId> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(tokens[i]);
  }
  return out;
}

namespace {

Corpus make_split(const ToyModel& model, const SyntheticSpec& spec,
                  const std::vector<std::vector<TokenId>>& topics,
                  std::size_t count, const std::string& prefix,
                  std::mt19937_64& rng) {
  Corpus out;
  out.reserve(count);
  std::uniform_int_distribution<std::size_t> pick_topic(0, topics.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_len(spec.min_len, spec.max_len);
  for (std::size_t u = 0; u < count; ++u) {
    const auto& vocab = topics[pick_topic(rng)];
    std::uniform_int_distribution<std::size_t> pick_tok(0, vocab.size() - 1);
    const std::size_t len = pick_len(rng);
    TokenSeq tokens;
    tokens.reserve(len);
    while (tokens.size() < len) {
      const TokenId t = vocab[pick_tok(rng)];
      if (!tokens.empty() && tokens.back() == t) continue;
      tokens.push_back(t);
    }
    char id[32];
    std::snprintf(id, sizeof id, "%s%05zu", prefix.c_str(), u);
    Utterance utt;
    utt.id = id;
    utt.audio = model.synthesize(tokens, utt.id, spec.acoustic_sigma, rng());
    utt.text = tokens_to_text(tokens);
    utt.tokens = std::move(tokens);
    out.push_back(std::move(utt));
  }
  return out;
}

}  // namespace

SyntheticBenchmark make_synthetic_benchmark(const SyntheticSpec& spec) {
  if (spec.vocab_size < kToyFirstContentToken + 2 ||
      (spec.vocab_size - kToyFirstContentToken) % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "synthetic vocabulary needs an even number of content tokens");
  }
  const std::size_t n_pairs = (spec.vocab_size - kToyFirstContentToken) / 2;
  if (spec.pairs_per_topic + spec.singles_per_topic > n_pairs ||
      spec.pairs_per_topic + spec.singles_per_topic == 0 || spec.n_topics == 0) {
    throw Error(ErrorCode::kInvalidArgument, "topic shape does not fit the vocabulary");
  }
  if (spec.min_len == 0 || spec.min_len > spec.max_len) {
    throw Error(ErrorCode::kInvalidArgument, "invalid utterance length range");
  }
  if (spec.pairs_per_topic == 0 && spec.singles_per_topic < 2) {
    throw Error(ErrorCode::kInvalidArgument, "topics need at least two tokens");
  }

  std::vector<std::pair<TokenId, TokenId>> pairs;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const auto a = static_cast<TokenId>(kToyFirstContentToken + 2 * p);
    pairs.emplace_back(a, a + 1);
  }

  SyntheticBenchmark bench;
  auto& mc = bench.model_config;
  mc.vocab_size = spec.vocab_size;
  mc.embed_dim = spec.embed_dim;
  mc.frame_duration_s = spec.frame_duration_s;
  mc.confusion = pair_confusion(spec.vocab_size, pairs, spec.confusion_mass);
  mc.noise_sigma = spec.noise_sigma;
  mc.prefix_bias_beta = spec.prefix_bias_beta;
  mc.del_rate = spec.del_rate;
  mc.ins_rate = spec.ins_rate;
  mc.logit_noise = 1.0;
  mc.rng_seed = spec.seed;

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> order(n_pairs);
  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<TokenId> vocab;
    for (std::size_t i = 0; i < spec.pairs_per_topic; ++i) {
      vocab.push_back(pairs[order[i]].first);
      vocab.push_back(pairs[order[i]].second);
    }
    for (std::size_t i = 0; i < spec.singles_per_topic; ++i) {
      const auto& pr = pairs[order[spec.pairs_per_topic + i]];
      vocab.push_back((rng() & 1U) ? pr.first : pr.second);
    }
    std::sort(vocab.begin(), vocab.end());
    bench.topics.push_back(std::move(vocab));
  }

  const ToyModel model(mc);
  bench.train = make_split(model, spec, bench.topics, spec.n_train, "train-", rng);
  bench.test = make_split(model, spec, bench.topics, spec.n_test, "test-", rng);
  return bench;
}

}  // namespace m2r
