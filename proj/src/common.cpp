#include "m2r/errors.hpp"
#include "m2r/types.hpp"

#include <string>

namespace m2r {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kEmptyIndex: return "empty index";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kFrozen: return "frozen";
    case ErrorCode::kBudgetExceeded: return "budget exceeded";
    case ErrorCode::kMissingStore: return "missing datastore";
    case ErrorCode::kModelFailure: return "model failure";
    case ErrorCode::kLengthMismatch: return "length mismatch";
    case ErrorCode::kMissingReference: return "missing reference";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported version";
    case ErrorCode::kSizeMismatch: return "size mismatch";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kConfig: return "config error";
  }
  return "unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kSizeMismatch,
                "matrix data has " + std::to_string(data_.size()) +
                    " values, expected " + std::to_string(rows_ * cols_));
  }
}

void Matrix::append_row(std::span<const float> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "row of width " + std::to_string(values.size()) +
                    " appended to matrix of width " + std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void Matrix::append_rows(const Matrix& other) {
  if (other.rows_ == 0) return;
  if (rows_ == 0 && cols_ == 0) cols_ = other.cols_;
  if (other.cols_ != cols_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cannot append rows of width " + std::to_string(other.cols_) +
                    " to matrix of width " + std::to_string(cols_));
  }
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  rows_ += other.rows_;
}

}  // namespace m2r
