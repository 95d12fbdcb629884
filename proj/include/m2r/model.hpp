#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "m2r/types.hpp"

namespace m2r {

struct AudioSegment {
  std::string utterance_id;
  Matrix frames;  // one feature vector per row
  double frame_duration_s = 0.02;

  double duration_s() const noexcept {
    return static_cast<double>(frames.rows()) * frame_duration_s;
  }
};

// Concatenates segments in order. All parts must share frame width and
// frame duration.
AudioSegment concat_audio(std::span<const AudioSegment* const> parts,
                          std::string utterance_id);

struct EncodeResult {
  std::string utterance_id;
  Matrix frame_embeddings;
  std::size_t valid_frame_count = 0;
};

struct StepOutput {
  std::vector<float> logits;
  std::vector<float> knn_query;  // the decoder tap used as kNN key and query
};

struct ModelInfo {
  std::size_t vocab_size = 0;
  std::size_t encoder_dim = 0;
  std::size_t tap_dim = 0;
  TokenId start_token = 0;
  TokenId eos_token = 1;
};

/// Contract for an encoder-decoder ASR model driven by the engine.
///
/// Implementations are immutable after construction and every call is
/// deterministic in its arguments, so one instance can serve concurrent
/// decode sessions.
class AsrModel {
 public:
  virtual ~AsrModel() = default;

  virtual ModelInfo info() const = 0;

  virtual EncodeResult encode(const AudioSegment& audio) const = 0;

  /// Next-token logits and tap for `context`, which begins with the start
  /// token followed by `forced_prefix_len` forced prompt tokens and then the
  /// free tokens emitted so far.
  virtual StepOutput decode_step(const EncodeResult& encoded,
                                 std::span<const TokenId> context,
                                 std::size_t forced_prefix_len) const = 0;

  /// One output per position of `target` (content tokens followed by EOS),
  /// each conditioned on the ground-truth history.
  virtual std::vector<StepOutput> teacher_force(
      const EncodeResult& encoded, std::span<const TokenId> target) const = 0;
};

// Content tokens followed by the end-of-sequence token.
TokenSeq target_sequence(std::span<const TokenId> tokens, TokenId eos);

// Numerically stable softmax of float logits, in double precision.
std::vector<double> softmax(std::span<const float> logits);

}  // namespace m2r
