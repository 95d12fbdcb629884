#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace m2r {

using TokenId = std::uint32_t;
using EntryId = std::uint64_t;
using TokenSeq = std::vector<TokenId>;

// Row-major float matrix; rows are embedding vectors.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<float> row(std::size_t i) noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }

  void append_row(std::span<const float> values);
  void append_rows(const Matrix& other);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

}  // namespace m2r
