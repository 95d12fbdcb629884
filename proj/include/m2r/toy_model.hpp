#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "m2r/model.hpp"

namespace m2r {

inline constexpr TokenId kToyStartToken = 0;
inline constexpr TokenId kToyEosToken = 1;
inline constexpr TokenId kToyFirstContentToken = 2;

struct ToyModelConfig {
  std::size_t vocab_size = 64;  // includes start and end tokens
  std::size_t embed_dim = 32;
  double frame_duration_s = 0.02;
  // Row-major vocab_size x vocab_size, row-stochastic. Empty means identity.
  std::vector<double> confusion;
  double noise_sigma = 0.0;       // Gaussian noise on the kNN tap
  double prefix_bias_beta = 0.0;  // logit bonus for tokens seen in the prefix
  double del_rate = 0.0;          // per-step chance of an early-EOS boost
  double ins_rate = 0.0;          // per-step chance of a repeat boost
  double event_boost = 14.5;      // logit added by a deletion/insertion event
  double logit_noise = 0.0;       // Gumbel scale on logits; 1.0 samples rows
  double confusion_floor = 1e-5;  // added before taking log of a row
  std::uint64_t rng_seed = 0;
};

// Identity confusion over `vocab_size` tokens.
std::vector<double> identity_confusion(std::size_t vocab_size);

// Moves `mass` of each listed token's row onto its partner, both ways.
std::vector<double> pair_confusion(
    std::size_t vocab_size,
    std::span<const std::pair<TokenId, TokenId>> pairs, double mass);

/// Deterministic reference model with a 1-frame-per-token latent alignment.
///
/// Audio frames are noisy token embeddings and the encoder is frame-local
/// (identity), so the latent transcript can be read back from the frames.
/// At each step the decoder locates its cursor frame (forced prefix tokens
/// consume prompt frames one-to-one, a free token that repeats its
/// predecessor is treated as an insertion and does not advance), reads the
/// frame through a sharp positional attention over all frames and scores
///
///   log(confusion[latent] + floor) + beta * [token in prefix]
///     + seeded Gumbel noise + seeded deletion/insertion boosts.
///
/// All randomness is keyed on (seed, test-audio fingerprint, cursor offset,
/// free step), so the same test utterance sees the same noise whether or not
/// prompts are prepended.
class ToyModel final : public AsrModel {
 public:
  explicit ToyModel(ToyModelConfig config);

  const ToyModelConfig& config() const noexcept { return config_; }
  ModelInfo info() const override;

  EncodeResult encode(const AudioSegment& audio) const override;
  StepOutput decode_step(const EncodeResult& encoded,
                         std::span<const TokenId> context,
                         std::size_t forced_prefix_len) const override;
  std::vector<StepOutput> teacher_force(
      const EncodeResult& encoded,
      std::span<const TokenId> target) const override;

  std::span<const float> embedding(TokenId token) const;

  /// Audio for `tokens`: one frame per token, embedding plus Gaussian
  /// acoustic noise seeded by `acoustic_seed`.
  AudioSegment synthesize(std::span<const TokenId> tokens,
                          std::string utterance_id, double acoustic_sigma,
                          std::uint64_t acoustic_seed) const;

 private:
  struct StepState {
    std::size_t cursor = 0;      // absolute frame index
    std::size_t free_steps = 0;  // free tokens already emitted
    bool has_prev = false;
    TokenId prev = 0;
  };

  StepState replay(std::span<const TokenId> context,
                   std::size_t forced_prefix_len) const;
  TokenId read_latent(const EncodeResult& encoded, std::size_t cursor) const;
  std::uint64_t fingerprint(const EncodeResult& encoded,
                            std::size_t first_frame) const;
  StepOutput score(const EncodeResult& encoded, std::size_t forced_prefix_len,
                   std::span<const TokenId> prefix, const StepState& state,
                   std::uint64_t audio_key) const;

  ToyModelConfig config_;
  Matrix embeddings_;
};

}  // namespace m2r
