#include "m2r/pipeline.hpp"

#include <chrono>
#include <optional>
#include <string>

#include "m2r/errors.hpp"

namespace m2r {

const char* to_string(DecodeMode mode) noexcept {
  switch (mode) {
    case DecodeMode::kBaseline: return "baseline";
    case DecodeMode::kKnnOnly: return "knn_only";
    case DecodeMode::kIclOnly: return "icl_only";
    case DecodeMode::kM2r: return "m2r";
  }
  return "unknown";
}

DecodeMode parse_mode(std::string_view name) {
  if (name == "baseline") return DecodeMode::kBaseline;
  if (name == "knn_only") return DecodeMode::kKnnOnly;
  if (name == "icl_only") return DecodeMode::kIclOnly;
  if (name == "m2r") return DecodeMode::kM2r;
  throw Error(ErrorCode::kInvalidArgument, "unknown decode mode '" + std::string(name) + "'");
}

void DecodeConfig::validate() const {
  knn.validate();
  if (max_decode_len < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_decode_len must be >= 1");
  }
  if (!(audio_budget_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "audio budget must be > 0");
  }
  if (uses_icl(mode) && k_sentence < 1) {
    throw Error(ErrorCode::kInvalidArgument, "k_sentence must be >= 1");
  }
}

CorpusAudioSource::CorpusAudioSource(const Corpus& corpus) {
  for (const auto& u : corpus) by_id_.emplace(u.id, &u.audio);
}

const AudioSegment& CorpusAudioSource::audio(std::string_view utterance_id) const {
  const auto it = by_id_.find(std::string(utterance_id));
  if (it == by_id_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no audio for prompt '" + std::string(utterance_id) + "'");
  }
  return *it->second;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

TokenId argmax_excluding(const std::vector<double>& probs, TokenId excluded) {
  TokenId best = excluded == 0 ? 1 : 0;
  for (TokenId t = 0; t < probs.size(); ++t) {
    if (t == excluded) continue;
    if (probs[t] > probs[best]) best = t;
  }
  return best;
}

}  // namespace

DecodeResult decode_greedy(const AsrModel& model, const AudioSegment& audio,
                           const PromptPlan& plan, const AudioSource* prompt_audio,
                           const TokenDatastore* store, const DecodeConfig& config) {
  const auto start = Clock::now();
  config.validate();
  const bool knn = uses_knn(config.mode);
  const bool icl = uses_icl(config.mode) && !plan.prompts.empty();
  if (knn && store == nullptr) {
    throw Error(ErrorCode::kMissingStore, "kNN decoding requested without a token datastore");
  }
  const ModelInfo info = model.info();
  if (knn && (store->dim() != info.tap_dim || store->vocab_size() != info.vocab_size)) {
    throw Error(ErrorCode::kDimensionMismatch, "token datastore does not match the model");
  }
  if (icl) {
    if (plan.prompts.size() > config.n_max ||
        plan.total_prompt_duration_s + audio.duration_s() > config.audio_budget_s) {
      throw Error(ErrorCode::kBudgetExceeded,
                  "prompt plan for '" + audio.utterance_id + "' violates the budget");
    }
    if (prompt_audio == nullptr) {
      throw Error(ErrorCode::kInvalidArgument, "prompt plan without an audio source");
    }
  }

  std::vector<const AudioSegment*> parts;
  TokenSeq context{info.start_token};
  if (icl) {
    for (const auto& p : plan.prompts) parts.push_back(&prompt_audio->audio(p.utterance_id));
    context.insert(context.end(), plan.prefix_tokens.begin(), plan.prefix_tokens.end());
  }
  parts.push_back(&audio);
  const std::size_t forced = context.size() - 1;

  const EncodeResult encoded =
      parts.size() == 1 ? model.encode(audio)
                        : model.encode(concat_audio(parts, audio.utterance_id));

  DecodeResult result;
  result.utterance_id = audio.utterance_id;
  result.audio_duration_s = audio.duration_s();
  result.prompt_duration_s = icl ? plan.total_prompt_duration_s : 0.0;
  result.n_prompts_used = icl ? plan.prompts.size() : 0;

  while (result.hypothesis.size() < config.max_decode_len) {
    const StepOutput step = model.decode_step(encoded, context, forced);
    if (step.logits.size() != info.vocab_size) {
      throw Error(ErrorCode::kModelFailure, "model returned logits of the wrong size");
    }
    Distribution p{softmax(step.logits)};
    if (knn) {
      p = interpolate(p, knn_distribution(*store, step.knn_query, config.knn),
                      config.knn.lambda);
    }
    const TokenId next = argmax_excluding(p.probs, info.start_token);
    if (next == info.eos_token) break;
    result.hypothesis.push_back(next);
    context.push_back(next);
  }
  result.wall_time_s = seconds_since(start);
  return result;
}

namespace {

DecodeResult decode_one(const BatchInputs& in, const DecodeConfig& config,
                        const Utterance& utt) {
  const auto start = Clock::now();
  PromptPlan plan;
  if (uses_icl(config.mode) && config.n_max > 0) {
    if (in.sentence_store == nullptr) {
      throw Error(ErrorCode::kMissingStore,
                  "prompt retrieval requested without a sentence datastore");
    }
    std::optional<std::string_view> exclude;
    if (config.exclude_self) exclude = utt.id;
    const auto candidates = retrieve_prompts(*in.sentence_store, *in.model, utt.audio,
                                             config.k_sentence, exclude);
    plan = pack_prompts(candidates, utt.audio.duration_s(), config.audio_budget_s,
                        config.n_max);
  }
  const double prep_s = seconds_since(start);
  DecodeResult r = decode_greedy(*in.model, utt.audio, plan, in.prompt_audio,
                                 in.token_store, config);
  r.wall_time_s += prep_s;
  return r;
}

void check_inputs(const BatchInputs& in) {
  if (in.model == nullptr || in.test_set == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "batch needs a model and a test set");
  }
}

BatchOutcome collect(std::vector<std::optional<DecodeResult>>& slots,
                     std::vector<std::optional<UtteranceFailure>>& failed,
                     std::vector<ErrorCode>& codes, const DecodeConfig& config) {
  BatchOutcome out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (failed[i]) {
      if (config.on_error == OnError::kAbort) {
        throw Error(codes[i], "utterance '" + failed[i]->utterance_id +
                                  "': " + failed[i]->message);
      }
      out.failures.push_back(std::move(*failed[i]));
    } else {
      out.results.push_back(std::move(*slots[i]));
    }
  }
  return out;
}

template <bool Parallel>
BatchOutcome run_batch_impl(const BatchInputs& in, const DecodeConfig& config) {
  check_inputs(in);
  config.validate();
  const Corpus& tests = *in.test_set;
  const auto n = static_cast<std::ptrdiff_t>(tests.size());
  std::vector<std::optional<DecodeResult>> slots(tests.size());
  std::vector<std::optional<UtteranceFailure>> failed(tests.size());
  std::vector<ErrorCode> codes(tests.size(), ErrorCode::kModelFailure);

#pragma omp parallel for schedule(dynamic, 1) if (Parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      slots[idx] = decode_one(in, config, tests[idx]);
    } catch (const Error& e) {
      codes[idx] = e.code();
      failed[idx] = UtteranceFailure{idx, tests[idx].id, e.what()};
    } catch (const std::exception& e) {
      failed[idx] = UtteranceFailure{idx, tests[idx].id, e.what()};
    }
  }
  return collect(slots, failed, codes, config);
}

}  // namespace

BatchOutcome run_batch(const BatchInputs& in, const DecodeConfig& config) {
  return run_batch_impl<true>(in, config);
}

BatchOutcome run_batch_serial(const BatchInputs& in, const DecodeConfig& config) {
  return run_batch_impl<false>(in, config);
}

}  // namespace m2r
