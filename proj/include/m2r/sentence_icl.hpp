#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "m2r/model.hpp"
#include "m2r/synthetic.hpp"
#include "m2r/token_knn.hpp"
#include "m2r/vector_index.hpp"

namespace m2r {

struct SentenceEntry {
  std::string utterance_id;  // also the audio handle
  TokenSeq tokens;
  std::string text;
  double duration_s = 0.0;

  friend bool operator==(const SentenceEntry&, const SentenceEntry&) = default;
};

class SentenceDatastore {
 public:
  explicit SentenceDatastore(std::size_t dim);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t dim() const noexcept { return index_.dim(); }

  void add(std::span<const float> key, SentenceEntry entry);
  void freeze() noexcept { index_.freeze(); }

  const VectorIndex& index() const noexcept { return index_; }
  const std::vector<SentenceEntry>& entries() const noexcept { return entries_; }
  std::size_t count_id(std::string_view utterance_id) const;

 private:
  VectorIndex index_;
  std::vector<SentenceEntry> entries_;
  std::unordered_map<std::string, std::size_t> id_counts_;
};

struct PromptPlan {
  std::vector<SentenceEntry> prompts;
  double total_prompt_duration_s = 0.0;
  TokenSeq prefix_tokens;
};

// Component-wise mean of `frames` (all rows are treated as valid).
std::vector<float> pool_mean(const Matrix& frames);

// Mean over the first `valid_frame_count` encoder frames.
std::vector<float> pool_encoded(const EncodeResult& encoded);

struct SentenceBuildResult {
  SentenceDatastore store;
  std::vector<BuildFailure> skipped;
};

SentenceBuildResult build_sentence_datastore(const AsrModel& model,
                                             const Corpus& corpus,
                                             OnError on_error = OnError::kAbort);

/// Top-k entries nearest to the pooled encoding of `query`, most similar
/// first. Entries whose id equals `exclude_id` are removed before ranking.
std::vector<SentenceEntry> retrieve_prompts(
    const SentenceDatastore& store, const AsrModel& model,
    const AudioSegment& query, std::size_t k,
    std::optional<std::string_view> exclude_id = std::nullopt);

// Same, from an already pooled query key.
std::vector<SentenceEntry> retrieve_prompts_by_key(
    const SentenceDatastore& store, std::span<const float> key, std::size_t k,
    std::optional<std::string_view> exclude_id = std::nullopt);

/// Greedy packing in candidate order: keep a candidate when fewer than
/// `n_max` are kept and its duration still fits next to the test utterance
/// within `audio_budget_s`; otherwise discard it and continue.
PromptPlan pack_prompts(std::span<const SentenceEntry> candidates,
                        double test_duration_s, double audio_budget_s,
                        std::size_t n_max);

}  // namespace m2r
