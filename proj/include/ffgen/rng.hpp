#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace ffgen {

// Counter-based random stream. A stream is identified by (seed, purpose, index)
// and its n-th output is a pure function of that key and n, so streams never
// share state and can be handed to independent workers.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::size_t index_below(std::size_t n);

  // Child stream; independent of this stream's position.
  Stream split(std::string_view purpose, std::uint64_t index = 0) const;

  std::uint64_t key() const { return key_; }

 private:
  explicit Stream(std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t hash_purpose(std::string_view purpose);

}  // namespace ffgen
