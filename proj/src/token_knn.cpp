#include "m2r/token_knn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "m2r/errors.hpp"

namespace m2r {

bool is_valid_distribution(const Distribution& d, double tol) {
  double sum = 0.0;
  for (double p : d.probs) {
    if (!std::isfinite(p) || p < 0.0) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

void KnnParams::validate() const {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "kNN k must be >= 1");
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kNN tau must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "kNN lambda must be in [0,1]");
  }
}

TokenDatastore::TokenDatastore(std::size_t dim, std::size_t vocab_size)
    : index_(dim), vocab_size_(vocab_size) {
  if (vocab_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "vocab_size must be >= 1");
  }
}

void TokenDatastore::add(const Matrix& keys, std::span<const TokenId> values) {
  if (keys.rows() != values.size()) {
    throw Error(ErrorCode::kSizeMismatch, "token keys and values differ in count");
  }
  for (TokenId v : values) {
    if (v >= vocab_size_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "token value " + std::to_string(v) + " outside vocabulary");
    }
  }
  index_.insert_batch(keys);
  values_.insert(values_.end(), values.begin(), values.end());
}

TokenBuildResult build_token_datastore(const AsrModel& model,
                                       const Corpus& corpus, OnError on_error) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyInput, "token datastore needs a non-empty corpus");
  }
  const ModelInfo info = model.info();
  TokenBuildResult result{TokenDatastore(info.tap_dim, info.vocab_size), {}};

  for (const auto& utt : corpus) {
    try {
      const EncodeResult enc = model.encode(utt.audio);
      const TokenSeq target = target_sequence(utt.tokens, info.eos_token);
      const auto steps = model.teacher_force(enc, target);
      if (steps.size() != target.size()) {
        throw Error(ErrorCode::kLengthMismatch,
                    "teacher forcing returned " + std::to_string(steps.size()) +
                        " steps for " + std::to_string(target.size()) +
                        " target tokens");
      }
      Matrix keys(0, info.tap_dim);
      for (const auto& s : steps) keys.append_row(s.knn_query);
      result.store.add(keys, target);
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

Distribution knn_distribution_from(const NeighborSet& neighbors,
                                   std::span<const TokenId> values,
                                   std::size_t vocab_size, double tau) {
  if (neighbors.empty()) {
    throw Error(ErrorCode::kEmptyIndex, "kNN distribution needs at least one neighbor");
  }
  double min_d = neighbors.front().distance;
  for (const auto& n : neighbors) min_d = std::min(min_d, n.distance);

  Distribution out{std::vector<double>(vocab_size, 0.0)};
  double total = 0.0;
  for (const auto& n : neighbors) {
    const double w = std::exp(-(n.distance - min_d) / tau);
    out.probs[values[n.id]] += w;
    total += w;
  }
  for (double& p : out.probs) p /= total;
  return out;
}

Distribution knn_distribution(const TokenDatastore& store,
                              std::span<const float> query,
                              const KnnParams& params) {
  params.validate();
  if (store.size() == 0) {
    throw Error(ErrorCode::kEmptyIndex, "kNN query on an empty token datastore");
  }
  const NeighborSet nn = store.index().query_topk(query, params.k);
  return knn_distribution_from(nn, store.values(), store.vocab_size(), params.tau);
}

Distribution interpolate(const Distribution& p_model, const Distribution& p_knn,
                         double lambda) {
  if (p_model.size() != p_knn.size()) {
    throw Error(ErrorCode::kSizeMismatch, "distributions differ in vocabulary size");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be in [0,1]");
  }
  Distribution out{std::vector<double>(p_model.size())};
  for (std::size_t i = 0; i < out.probs.size(); ++i) {
    out.probs[i] = lambda * p_knn.probs[i] + (1.0 - lambda) * p_model.probs[i];
  }
  return out;
}

}  // namespace m2r
