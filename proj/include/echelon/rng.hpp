#pragma once

#include <cstddef>
#include <cstdint>

namespace echelon {

/// Counter-based random stream. Each stream is identified by a 4-tuple
/// (seed, episode, node, purpose); identical tuples yield bit-identical
/// draw sequences regardless of what any other stream has consumed, so
/// streams can be handed to parallel workers without shared state.
///
/// The generator is a SplitMix64-style permutation applied to
/// key ^ f(counter); all integer arithmetic, reproducible across platforms.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t episode, uint64_t node, uint64_t purpose);

  uint64_t next_u64();
  /// Uniform in [0, 1).
  double next_unit();
  /// Uniform in (0, 1] (never zero; safe under log()).
  double next_unit_open();
  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double next_gaussian();
  bool next_bernoulli(double p);
  /// Uniform integer in [0, n).
  uint64_t next_below(uint64_t n);

  uint64_t key() const { return key_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

/// Stream purpose tags; the low 32 bits are free for a sub-index (e.g. the
/// dispatch period for lead-time draws).
namespace stream_purpose {
constexpr uint64_t tag(uint64_t kind, uint64_t sub = 0) { return (kind << 32) | sub; }
constexpr uint64_t demand(uint64_t period) { return tag(1, period); }
constexpr uint64_t lead_time(uint64_t period) { return tag(2, period); }
constexpr uint64_t action() { return tag(3); }
constexpr uint64_t init(uint64_t index) { return tag(4, index); }
constexpr uint64_t shuffle(uint64_t index) { return tag(5, index); }
constexpr uint64_t misc(uint64_t index) { return tag(6, index); }
}  // namespace stream_purpose

uint64_t splitmix64(uint64_t x);

/// FNV-1a over raw bytes; used for trace hashes and config hashes.
uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace echelon
