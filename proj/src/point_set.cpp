#include "ffgen/point_set.hpp"

#include "ffgen/errors.hpp"

namespace ffgen {

PointSet::PointSet(std::size_t dim, std::vector<double> flat) : dim_(dim), data_(std::move(flat)) {
  if (dim_ == 0 && !data_.empty()) throw InvalidInput("PointSet: zero dimension with data");
  if (dim_ != 0 && data_.size() % dim_ != 0) throw InvalidInput("PointSet: flat size is not a multiple of dim");
}

void PointSet::push_back(std::span<const double> p) {
  if (p.size() != dim_) {
    throw InvalidInput("PointSet: point of dimension " + std::to_string(p.size()) + ", expected " +
                       std::to_string(dim_));
  }
  data_.insert(data_.end(), p.begin(), p.end());
}

PointSet PointSet::subset(std::span<const std::size_t> indices) const {
  PointSet out(dim_);
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back((*this)[i]);
  return out;
}

}  // namespace ffgen
