#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "m2r/model.hpp"
#include "m2r/synthetic.hpp"
#include "m2r/vector_index.hpp"

namespace m2r {

// Probability vector over the token vocabulary.
struct Distribution {
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
};

// True when every entry is finite and non-negative and the entries sum to 1
// within `tol`.
bool is_valid_distribution(const Distribution& d, double tol = 1e-9);

struct KnnParams {
  std::size_t k = 16;
  double tau = 1.0;
  double lambda = 0.3;

  void validate() const;
};

enum class OnError { kAbort, kSkip };

struct BuildFailure {
  std::string utterance_id;
  std::string message;
};

class TokenDatastore {
 public:
  TokenDatastore(std::size_t dim, std::size_t vocab_size);

  std::size_t size() const noexcept { return values_.size(); }
  std::size_t dim() const noexcept { return index_.dim(); }
  std::size_t vocab_size() const noexcept { return vocab_size_; }

  void add(const Matrix& keys, std::span<const TokenId> values);
  void freeze() noexcept { index_.freeze(); }

  const VectorIndex& index() const noexcept { return index_; }
  const std::vector<TokenId>& values() const noexcept { return values_; }

 private:
  VectorIndex index_;
  std::vector<TokenId> values_;
  std::size_t vocab_size_;
};

struct TokenBuildResult {
  TokenDatastore store;
  std::vector<BuildFailure> skipped;
};

/// One entry per target position of every utterance (content tokens and the
/// closing EOS), keyed by the model's tap under teacher forcing.
TokenBuildResult build_token_datastore(const AsrModel& model,
                                       const Corpus& corpus,
                                       OnError on_error = OnError::kAbort);

/// kNN distribution over the vocabulary from the k nearest entries:
/// weight(y) = sum over neighbors labelled y of exp(-d / tau), normalized,
/// with d the squared L2 distance.
Distribution knn_distribution(const TokenDatastore& store,
                              std::span<const float> query,
                              const KnnParams& params);

// Same aggregation from an explicit neighbor list.
Distribution knn_distribution_from(const NeighborSet& neighbors,
                                   std::span<const TokenId> values,
                                   std::size_t vocab_size, double tau);

/// lambda * p_knn + (1 - lambda) * p_model, entry-wise.
Distribution interpolate(const Distribution& p_model, const Distribution& p_knn,
                         double lambda);

}  // namespace m2r
