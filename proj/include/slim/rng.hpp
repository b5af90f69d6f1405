#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace slim {

// Seeded random stream. All stochastic operations in the library take an
// Rng& explicitly; nothing reads global random state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  // Stream keyed by (seed, keys...). Used for per-epoch and per-sample
  // streams so results do not depend on worker scheduling.
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  bool bernoulli(double p);

  std::string state() const;
  void set_state(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace slim
