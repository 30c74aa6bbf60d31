#include "ffgen/rng.hpp"

namespace ffgen {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t combine(std::uint64_t a, std::uint64_t b) { return mix64(a ^ (mix64(b) + kGolden)); }

}  // namespace

std::uint64_t hash_purpose(std::string_view purpose) {
  // FNV-1a, stable across platforms and runs.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Stream::Stream(std::uint64_t seed, std::string_view purpose, std::uint64_t index)
    : key_(combine(combine(mix64(seed), hash_purpose(purpose)), index)) {}

Stream::result_type Stream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Stream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Stream::normal() { return normal_(*this); }

std::size_t Stream::index_below(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(*this);
}

Stream Stream::split(std::string_view purpose, std::uint64_t index) const {
  return Stream(combine(combine(key_, hash_purpose(purpose)), index));
}

}  // namespace ffgen
