#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ffgen {

using Vec = std::vector<double>;

// Row-major list of points of a common dimension.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::size_t count) : dim_(dim), data_(dim * count, 0.0) {}
  PointSet(std::size_t dim, std::vector<double> flat);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const { return data_.empty(); }

  std::span<const double> operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> operator[](std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  void push_back(std::span<const double> p);
  void reserve(std::size_t n) { data_.reserve(n * dim_); }

  const std::vector<double>& flat() const { return data_; }

  PointSet subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

}  // namespace ffgen
