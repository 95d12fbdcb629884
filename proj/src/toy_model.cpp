#include "m2r/toy_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "m2r/errors.hpp"

namespace m2r {

namespace {

constexpr double kAttentionSharpness = 16.0;
constexpr std::uint64_t kTapStream = 0x7461702d6e6f6973ULL;
constexpr std::uint64_t kEmbeddingStream = 0x656d62656464696eULL;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) noexcept {
  // splitmix64 finalizer over the running state
  std::uint64_t z = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_token(TokenId t, std::size_t vocab) {
  if (t >= vocab) {
    throw Error(ErrorCode::kInvalidArgument,
                "token id " + std::to_string(t) + " outside vocabulary of " +
                    std::to_string(vocab));
  }
}

}  // namespace

std::vector<double> identity_confusion(std::size_t vocab_size) {
  std::vector<double> m(vocab_size * vocab_size, 0.0);
  for (std::size_t i = 0; i < vocab_size; ++i) m[i * vocab_size + i] = 1.0;
  return m;
}

std::vector<double> pair_confusion(
    std::size_t vocab_size,
    std::span<const std::pair<TokenId, TokenId>> pairs, double mass) {
  if (!(mass >= 0.0 && mass <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confusion mass must be in [0,1]");
  }
  auto m = identity_confusion(vocab_size);
  for (const auto& [a, b] : pairs) {
    check_token(a, vocab_size);
    check_token(b, vocab_size);
    if (a == b) {
      throw Error(ErrorCode::kInvalidArgument, "confusable pair must be distinct");
    }
    m[a * vocab_size + a] = 1.0 - mass;
    m[a * vocab_size + b] = mass;
    m[b * vocab_size + b] = 1.0 - mass;
    m[b * vocab_size + a] = mass;
  }
  return m;
}

ToyModel::ToyModel(ToyModelConfig config) : config_(std::move(config)) {
  const std::size_t v = config_.vocab_size;
  if (v <= kToyFirstContentToken) {
    throw Error(ErrorCode::kInvalidArgument, "toy vocabulary needs content tokens");
  }
  if (config_.embed_dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embed_dim must be >= 1");
  }
  if (!(config_.frame_duration_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "frame_duration_s must be > 0");
  }
  if (config_.confusion.empty()) config_.confusion = identity_confusion(v);
  if (config_.confusion.size() != v * v) {
    throw Error(ErrorCode::kDimensionMismatch,
                "confusion matrix must be vocab_size x vocab_size");
  }
  for (std::size_t r = 0; r < v; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < v; ++c) {
      const double p = config_.confusion[r * v + c];
      if (!(p >= 0.0)) {
        throw Error(ErrorCode::kInvalidArgument, "negative confusion entry");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument,
                  "confusion row " + std::to_string(r) + " does not sum to 1");
    }
  }
  auto rate_ok = [](double r) { return r >= 0.0 && r < 0.5; };
  if (!rate_ok(config_.del_rate) || !rate_ok(config_.ins_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "noise rates must be in [0, 0.5)");
  }
  if (config_.noise_sigma < 0.0 || config_.prefix_bias_beta < 0.0 ||
      config_.logit_noise < 0.0 || !(config_.confusion_floor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "toy model scale parameters out of range");
  }

  embeddings_ = Matrix(v, config_.embed_dim);
  std::mt19937_64 rng(mix(config_.rng_seed, kEmbeddingStream));
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (float& x : embeddings_.data()) x = normal(rng);
}

ModelInfo ToyModel::info() const {
  return {config_.vocab_size, config_.embed_dim, config_.embed_dim,
          kToyStartToken, kToyEosToken};
}

std::span<const float> ToyModel::embedding(TokenId token) const {
  check_token(token, config_.vocab_size);
  return embeddings_.row(token);
}

AudioSegment ToyModel::synthesize(std::span<const TokenId> tokens,
                                  std::string utterance_id,
                                  double acoustic_sigma,
                                  std::uint64_t acoustic_seed) const {
  AudioSegment audio;
  audio.utterance_id = std::move(utterance_id);
  audio.frame_duration_s = config_.frame_duration_s;
  audio.frames = Matrix(tokens.size(), config_.embed_dim);
  std::mt19937_64 rng(acoustic_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < kToyFirstContentToken) {
      throw Error(ErrorCode::kInvalidArgument, "audio can only carry content tokens");
    }
    const auto emb = embedding(tokens[i]);
    auto row = audio.frames.row(i);
    for (std::size_t d = 0; d < row.size(); ++d) {
      row[d] = static_cast<float>(emb[d] + acoustic_sigma * normal(rng));
    }
  }
  return audio;
}

EncodeResult ToyModel::encode(const AudioSegment& audio) const {
  if (audio.frames.rows() == 0) {
    throw Error(ErrorCode::kEmptyInput,
                "cannot encode empty audio '" + audio.utterance_id + "'");
  }
  if (audio.frames.cols() != config_.embed_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "audio frame width does not match the toy model");
  }
  return {audio.utterance_id, audio.frames, audio.frames.rows()};
}

ToyModel::StepState ToyModel::replay(std::span<const TokenId> context,
                                     std::size_t forced_prefix_len) const {
  if (context.empty() || context.front() != kToyStartToken) {
    throw Error(ErrorCode::kInvalidArgument, "context must begin with the start token");
  }
  if (forced_prefix_len + 1 > context.size()) {
    throw Error(ErrorCode::kInvalidArgument, "forced prefix longer than context");
  }
  for (std::size_t i = 1; i < context.size(); ++i) {
    check_token(context[i], config_.vocab_size);
    if (context[i] == kToyStartToken || context[i] == kToyEosToken) {
      throw Error(ErrorCode::kInvalidArgument,
                  "special token inside decoder context at position " +
                      std::to_string(i));
    }
  }
  StepState s;
  s.cursor = forced_prefix_len;
  for (std::size_t i = 1 + forced_prefix_len; i < context.size(); ++i) {
    const TokenId t = context[i];
    if (!(s.has_prev && t == s.prev)) ++s.cursor;
    ++s.free_steps;
    s.prev = t;
    s.has_prev = true;
  }
  return s;
}

TokenId ToyModel::read_latent(const EncodeResult& encoded,
                              std::size_t cursor) const {
  const std::size_t n = encoded.valid_frame_count;
  if (cursor >= n) return kToyEosToken;

  const std::size_t dim = encoded.frame_embeddings.cols();
  std::vector<double> readout(dim, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double offset = static_cast<double>(j) - static_cast<double>(cursor);
    const double w = std::exp(-kAttentionSharpness * offset * offset);
    total += w;
    const auto frame = encoded.frame_embeddings.row(j);
    for (std::size_t d = 0; d < dim; ++d) readout[d] += w * frame[d];
  }
  for (double& x : readout) x /= total;

  TokenId best = kToyFirstContentToken;
  double best_dist = std::numeric_limits<double>::infinity();
  for (TokenId t = kToyFirstContentToken; t < config_.vocab_size; ++t) {
    const auto emb = embeddings_.row(t);
    double dist = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = readout[d] - emb[d];
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = t;
    }
  }
  return best;
}

std::uint64_t ToyModel::fingerprint(const EncodeResult& encoded,
                                    std::size_t first_frame) const {
  std::uint64_t h = mix(config_.rng_seed, encoded.valid_frame_count - first_frame);
  for (std::size_t j = first_frame; j < encoded.valid_frame_count; ++j) {
    for (float x : encoded.frame_embeddings.row(j)) {
      h = mix(h, std::bit_cast<std::uint32_t>(x));
    }
  }
  return h;
}

StepOutput ToyModel::score(const EncodeResult& encoded,
                           std::size_t forced_prefix_len,
                           std::span<const TokenId> prefix,
                           const StepState& state,
                           std::uint64_t audio_key) const {
  const std::size_t v = config_.vocab_size;
  const TokenId latent = read_latent(encoded, state.cursor);
  const std::uint64_t step_key =
      mix(mix(audio_key, state.cursor - forced_prefix_len), state.free_steps);

  std::vector<bool> in_prefix(v, false);
  for (TokenId t : prefix) in_prefix[t] = true;

  std::mt19937_64 rng(step_key);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::extreme_value_distribution<double> gumbel(0.0, 1.0);
  const bool deletion = uniform(rng) < config_.del_rate;
  const bool insertion = uniform(rng) < config_.ins_rate;

  StepOutput out;
  out.logits.resize(v);
  const double* row = config_.confusion.data() + latent * v;
  for (std::size_t y = 0; y < v; ++y) {
    double logit = std::log(row[y] + config_.confusion_floor);
    if (in_prefix[y]) logit += config_.prefix_bias_beta;
    const double g = gumbel(rng);
    if (config_.logit_noise > 0.0) logit += config_.logit_noise * g;
    out.logits[y] = static_cast<float>(logit);
  }
  if (deletion && latent != kToyEosToken) {
    out.logits[kToyEosToken] += static_cast<float>(config_.event_boost);
  }
  if (insertion && state.has_prev) {
    out.logits[state.prev] += static_cast<float>(config_.event_boost);
  }

  std::mt19937_64 tap_rng(mix(step_key, kTapStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto emb = embeddings_.row(latent);
  out.knn_query.resize(emb.size());
  for (std::size_t d = 0; d < emb.size(); ++d) {
    out.knn_query[d] =
        static_cast<float>(emb[d] + config_.noise_sigma * normal(tap_rng));
  }
  return out;
}

StepOutput ToyModel::decode_step(const EncodeResult& encoded,
                                 std::span<const TokenId> context,
                                 std::size_t forced_prefix_len) const {
  const StepState state = replay(context, forced_prefix_len);
  const std::size_t first_test_frame =
      std::min(forced_prefix_len, encoded.valid_frame_count);
  return score(encoded, forced_prefix_len,
               context.subspan(1, forced_prefix_len), state,
               fingerprint(encoded, first_test_frame));
}

std::vector<StepOutput> ToyModel::teacher_force(
    const EncodeResult& encoded, std::span<const TokenId> target) const {
  if (target.empty()) {
    throw Error(ErrorCode::kEmptyInput, "teacher forcing needs a non-empty target");
  }
  if (target.size() != encoded.valid_frame_count + 1 ||
      target.back() != kToyEosToken) {
    throw Error(ErrorCode::kLengthMismatch,
                "target of " + std::to_string(target.size()) +
                    " tokens does not align with " +
                    std::to_string(encoded.valid_frame_count) + " frames in '" +
                    encoded.utterance_id + "'");
  }
  for (std::size_t i = 0; i + 1 < target.size(); ++i) {
    check_token(target[i], config_.vocab_size);
    if (target[i] < kToyFirstContentToken) {
      throw Error(ErrorCode::kInvalidArgument, "special token inside target");
    }
  }

  const std::uint64_t audio_key = fingerprint(encoded, 0);
  std::vector<StepOutput> out;
  out.reserve(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    StepState state;
    state.cursor = i;
    state.free_steps = i;
    state.has_prev = i > 0;
    state.prev = i > 0 ? target[i - 1] : 0;
    out.push_back(score(encoded, 0, {}, state, audio_key));
  }
  return out;
}

}  // namespace m2r
