#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "m2r/types.hpp"

namespace m2r {

struct Neighbor {
  EntryId id = 0;
  double distance = 0.0;  // squared L2

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Total order used everywhere a neighbor list is ranked: distance first,
// then ascending entry id.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) noexcept {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

using NeighborSet = std::vector<Neighbor>;

// Squared L2 between two float vectors, accumulated in double. Shared by the
// parallel scan and the oracle.
double squared_l2(std::span<const float> a, std::span<const float> b) noexcept;

/// Exact flat index over fixed-dimension float keys under squared L2.
///
/// Keys are appended during a build phase; `freeze()` ends that phase, after
/// which the index is immutable and may be queried from any number of
/// threads. Entry ids are dense and assigned in insertion order.
class VectorIndex {
 public:
  explicit VectorIndex(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return keys_.rows(); }
  bool frozen() const noexcept { return frozen_; }

  /// Appends every row of `keys`. The whole batch is rejected, leaving the
  /// index unchanged, if any row has the wrong width or a non-finite value.
  std::vector<EntryId> insert_batch(const Matrix& keys);
  EntryId insert(std::span<const float> key);

  void freeze() noexcept { frozen_ = true; }

  /// Top-k by (distance, id). OpenMP-parallel scan with per-thread partial
  /// selections merged at the end.
  NeighborSet query_topk(std::span<const float> query, std::size_t k) const;

  /// Serial reference: computes every distance and fully sorts them.
  NeighborSet query_topk_oracle(std::span<const float> query,
                                std::size_t k) const;

  std::span<const float> key(EntryId id) const;
  const Matrix& keys() const noexcept { return keys_; }

 private:
  void check_query(std::span<const float> query, std::size_t k) const;

  std::size_t dim_;
  Matrix keys_;
  bool frozen_ = false;
};

}  // namespace m2r
