#include "echelon/rng.hpp"

#include <cmath>

namespace echelon {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a(const void* data, size_t len, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream::RngStream(uint64_t seed, uint64_t episode, uint64_t node, uint64_t purpose) {
  uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ episode);
  k = splitmix64(k ^ node);
  k = splitmix64(k ^ purpose);
  key_ = k;
}

uint64_t RngStream::next_u64() {
  return splitmix64(key_ ^ (counter_++ * 0x9e3779b97f4a7c15ULL));
}

double RngStream::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_unit_open() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  const double u1 = next_unit_open();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 6.283185307179586476925286766559 * u2;
  cached_gaussian_ = r * std::sin(angle);
  has_cached_gaussian_ = true;
  return r * std::cos(angle);
}

bool RngStream::next_bernoulli(double p) { return next_unit() < p; }

uint64_t RngStream::next_below(uint64_t n) {
  // Multiply-shift rejection-free mapping; bias is negligible for n << 2^64.
  return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
}

}  // namespace echelon
