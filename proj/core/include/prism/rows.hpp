#pragma once

#include <cassert>
#include <cstddef>
#include <span>

namespace prism {

// Non-owning row-major matrix view. Geometry and detectors accept either the
// stored float32 vectors or double data built by tests and generators.
template <typename T>
class RowsView {
 public:
  RowsView() = default;
  RowsView(std::span<const T> data, std::size_t dim) : data_(data), dim_(dim) {
    assert(dim == 0 ? data.empty() : data.size() % dim == 0);
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::span<const T> row(std::size_t i) const { return data_.subspan(i * dim_, dim_); }
  std::span<const T> data() const noexcept { return data_; }

 private:
  std::span<const T> data_;
  std::size_t dim_ = 0;
};

}  // namespace prism
