#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "m2r/model.hpp"
#include "m2r/sentence_icl.hpp"
#include "m2r/synthetic.hpp"
#include "m2r/token_knn.hpp"

namespace m2r {

enum class DecodeMode { kBaseline, kKnnOnly, kIclOnly, kM2r };

const char* to_string(DecodeMode mode) noexcept;
DecodeMode parse_mode(std::string_view name);

inline bool uses_knn(DecodeMode m) noexcept {
  return m == DecodeMode::kKnnOnly || m == DecodeMode::kM2r;
}
inline bool uses_icl(DecodeMode m) noexcept {
  return m == DecodeMode::kIclOnly || m == DecodeMode::kM2r;
}

struct DecodeConfig {
  DecodeMode mode = DecodeMode::kM2r;
  KnnParams knn;
  std::size_t n_max = 10;
  double audio_budget_s = 30.0;
  std::size_t k_sentence = 16;
  std::size_t max_decode_len = 28;
  bool exclude_self = false;
  OnError on_error = OnError::kAbort;

  void validate() const;
};

struct DecodeResult {
  std::string utterance_id;
  TokenSeq hypothesis;  // free tokens only, EOS excluded
  double wall_time_s = 0.0;
  double audio_duration_s = 0.0;   // test audio
  double prompt_duration_s = 0.0;  // prompt audio prepended to it
  std::size_t n_prompts_used = 0;
};

// Resolves prompt audio handles (utterance ids) to audio.
class AudioSource {
 public:
  virtual ~AudioSource() = default;
  virtual const AudioSegment& audio(std::string_view utterance_id) const = 0;
};

class CorpusAudioSource final : public AudioSource {
 public:
  explicit CorpusAudioSource(const Corpus& corpus);
  const AudioSegment& audio(std::string_view utterance_id) const override;

 private:
  std::unordered_map<std::string, const AudioSegment*> by_id_;
};

/// Greedy decode of one utterance.
///
/// The model input is the plan's prompt audio in plan order followed by the
/// test audio; the decoder context is the start token followed by the
/// plan's prefix tokens, which are forced. At each free step the next token
/// is the argmax of the model distribution, interpolated with the kNN
/// distribution when the mode uses kNN. Decoding ends at EOS or after
/// `max_decode_len` free tokens.
DecodeResult decode_greedy(const AsrModel& model, const AudioSegment& audio,
                           const PromptPlan& plan, const AudioSource* prompt_audio,
                           const TokenDatastore* store, const DecodeConfig& config);

struct UtteranceFailure {
  std::size_t index = 0;
  std::string utterance_id;
  std::string message;
};

struct BatchOutcome {
  std::vector<DecodeResult> results;  // input order, failed ones omitted
  std::vector<UtteranceFailure> failures;
};

struct BatchInputs {
  const AsrModel* model = nullptr;
  const Corpus* test_set = nullptr;
  const SentenceDatastore* sentence_store = nullptr;
  const AudioSource* prompt_audio = nullptr;
  const TokenDatastore* token_store = nullptr;
};

/// Decodes every test utterance with its retrieved prompts. Utterances are
/// decoded in parallel; results keep the input order.
BatchOutcome run_batch(const BatchInputs& in, const DecodeConfig& config);

// Single-threaded reference for run_batch.
BatchOutcome run_batch_serial(const BatchInputs& in, const DecodeConfig& config);

}  // namespace m2r
