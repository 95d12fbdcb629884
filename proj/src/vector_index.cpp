#include "m2r/vector_index.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "m2r/errors.hpp"

namespace m2r {

namespace {

// Bounded max-heap on neighbor_less; the root is the worst kept candidate.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { items_.reserve(k); }

  void offer(const Neighbor& n) {
    if (items_.size() < k_) {
      items_.push_back(n);
      std::push_heap(items_.begin(), items_.end(), neighbor_less);
    } else if (neighbor_less(n, items_.front())) {
      std::pop_heap(items_.begin(), items_.end(), neighbor_less);
      items_.back() = n;
      std::push_heap(items_.begin(), items_.end(), neighbor_less);
    }
  }

  const std::vector<Neighbor>& items() const noexcept { return items_; }

  NeighborSet sorted() && {
    std::sort_heap(items_.begin(), items_.end(), neighbor_less);
    return std::move(items_);
  }

 private:
  std::size_t k_;
  std::vector<Neighbor> items_;
};

}  // namespace

double squared_l2(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

VectorIndex::VectorIndex(std::size_t dim) : dim_(dim), keys_(0, dim) {
  if (dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "index dimension must be >= 1");
  }
}

std::vector<EntryId> VectorIndex::insert_batch(const Matrix& keys) {
  if (frozen_) {
    throw Error(ErrorCode::kFrozen, "insert into a frozen index");
  }
  if (keys.rows() == 0) return {};
  if (keys.cols() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "key dimension " + std::to_string(keys.cols()) +
                    " does not match index dimension " + std::to_string(dim_));
  }
  for (float v : keys.data()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite key value");
    }
  }
  std::vector<EntryId> ids(keys.rows());
  const EntryId first = size();
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = first + i;
  keys_.append_rows(keys);
  return ids;
}

EntryId VectorIndex::insert(std::span<const float> key) {
  Matrix one(0, dim_);
  if (key.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "key dimension " + std::to_string(key.size()) +
                    " does not match index dimension " + std::to_string(dim_));
  }
  one.append_row(key);
  return insert_batch(one).front();
}

std::span<const float> VectorIndex::key(EntryId id) const {
  if (id >= size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "entry id " + std::to_string(id) + " out of range");
  }
  return keys_.row(id);
}

void VectorIndex::check_query(std::span<const float> query,
                              std::size_t k) const {
  if (size() == 0) {
    throw Error(ErrorCode::kEmptyIndex, "query on an empty index");
  }
  if (query.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query dimension " + std::to_string(query.size()) +
                    " does not match index dimension " + std::to_string(dim_));
  }
  if (k == 0) {
    throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  }
}

NeighborSet VectorIndex::query_topk(std::span<const float> query,
                                    std::size_t k) const {
  check_query(query, k);
  const std::size_t n = size();
  const std::size_t kk = std::min(k, n);

  const int threads = omp_in_parallel() ? 1 : omp_get_max_threads();
  std::vector<TopK> partial(static_cast<std::size_t>(threads), TopK(kk));

#pragma omp parallel num_threads(threads)
  {
    TopK& local = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      const auto id = static_cast<EntryId>(i);
      local.offer({id, squared_l2(query, keys_.row(id))});
    }
  }

  TopK merged(kk);
  for (const auto& p : partial) {
    for (const auto& item : p.items()) merged.offer(item);
  }
  return std::move(merged).sorted();
}

NeighborSet VectorIndex::query_topk_oracle(std::span<const float> query,
                                           std::size_t k) const {
  check_query(query, k);
  NeighborSet all(size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i] = {static_cast<EntryId>(i), squared_l2(query, keys_.row(i))};
  }
  std::sort(all.begin(), all.end(), neighbor_less);
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace m2r
