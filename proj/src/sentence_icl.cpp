#include "m2r/sentence_icl.hpp"

#include <string>

#include "m2r/errors.hpp"

namespace m2r {

SentenceDatastore::SentenceDatastore(std::size_t dim) : index_(dim) {}

void SentenceDatastore::add(std::span<const float> key, SentenceEntry entry) {
  if (!(entry.duration_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "sentence entry '" + entry.utterance_id + "' has no duration");
  }
  if (entry.tokens.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "sentence entry '" + entry.utterance_id + "' has an empty transcript");
  }
  index_.insert(key);
  ++id_counts_[entry.utterance_id];
  entries_.push_back(std::move(entry));
}

std::size_t SentenceDatastore::count_id(std::string_view utterance_id) const {
  const auto it = id_counts_.find(std::string(utterance_id));
  return it == id_counts_.end() ? 0 : it->second;
}

std::vector<float> pool_mean(const Matrix& frames) {
  if (frames.rows() == 0) {
    throw Error(ErrorCode::kEmptyInput, "mean pooling over zero frames");
  }
  std::vector<double> acc(frames.cols(), 0.0);
  for (std::size_t r = 0; r < frames.rows(); ++r) {
    const auto row = frames.row(r);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += row[d];
  }
  std::vector<float> out(acc.size());
  const double n = static_cast<double>(frames.rows());
  for (std::size_t d = 0; d < acc.size(); ++d) {
    out[d] = static_cast<float>(acc[d] / n);
  }
  return out;
}

std::vector<float> pool_encoded(const EncodeResult& encoded) {
  const Matrix& all = encoded.frame_embeddings;
  if (encoded.valid_frame_count > all.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "valid frame count exceeds frames");
  }
  if (encoded.valid_frame_count == all.rows()) return pool_mean(all);
  std::vector<float> head(all.data().begin(),
                          all.data().begin() + encoded.valid_frame_count * all.cols());
  return pool_mean(Matrix(encoded.valid_frame_count, all.cols(), std::move(head)));
}

SentenceBuildResult build_sentence_datastore(const AsrModel& model,
                                             const Corpus& corpus,
                                             OnError on_error) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyInput, "sentence datastore needs a non-empty corpus");
  }
  SentenceBuildResult result{SentenceDatastore(model.info().encoder_dim), {}};
  for (const auto& utt : corpus) {
    try {
      const auto key = pool_encoded(model.encode(utt.audio));
      result.store.add(key, {utt.id, utt.tokens, utt.text, utt.audio.duration_s()});
    } catch (const Error& e) {
      if (on_error == OnError::kAbort) {
        throw Error(e.code(), "utterance '" + utt.id + "': " + e.what());
      }
      result.skipped.push_back({utt.id, e.what()});
    }
  }
  result.store.freeze();
  return result;
}

std::vector<SentenceEntry> retrieve_prompts_by_key(
    const SentenceDatastore& store, std::span<const float> key, std::size_t k,
    std::optional<std::string_view> exclude_id) {
  if (store.size() == 0) {
    throw Error(ErrorCode::kEmptyIndex, "prompt retrieval from an empty datastore");
  }
  const std::size_t excluded = exclude_id ? store.count_id(*exclude_id) : 0;
  std::vector<SentenceEntry> out;
  if (excluded == store.size()) return out;
  const NeighborSet nn = store.index().query_topk(key, k + excluded);
  for (const auto& n : nn) {
    const SentenceEntry& e = store.entries()[n.id];
    if (exclude_id && e.utterance_id == *exclude_id) continue;
    if (out.size() == k) break;
    out.push_back(e);
  }
  return out;
}

std::vector<SentenceEntry> retrieve_prompts(
    const SentenceDatastore& store, const AsrModel& model,
    const AudioSegment& query, std::size_t k,
    std::optional<std::string_view> exclude_id) {
  if (store.size() == 0) {
    throw Error(ErrorCode::kEmptyIndex, "prompt retrieval from an empty datastore");
  }
  return retrieve_prompts_by_key(store, pool_encoded(model.encode(query)), k,
                                 exclude_id);
}

PromptPlan pack_prompts(std::span<const SentenceEntry> candidates,
                        double test_duration_s, double audio_budget_s,
                        std::size_t n_max) {
  if (test_duration_s > audio_budget_s) {
    throw Error(ErrorCode::kBudgetExceeded,
                "test utterance of " + std::to_string(test_duration_s) +
                    " s exceeds the " + std::to_string(audio_budget_s) +
                    " s audio budget");
  }
  PromptPlan plan;
  for (const auto& c : candidates) {
    if (plan.prompts.size() >= n_max) break;
    const double with = plan.total_prompt_duration_s + c.duration_s;
    if (with + test_duration_s > audio_budget_s) continue;
    plan.total_prompt_duration_s = with;
    plan.prefix_tokens.insert(plan.prefix_tokens.end(), c.tokens.begin(),
                              c.tokens.end());
    plan.prompts.push_back(c);
  }
  return plan;
}

}  // namespace m2r
