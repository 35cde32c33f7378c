#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace laydef {

// Seeded generator whose derived sequences (bounded draws, shuffles) are
// identical on every standard library. std::mt19937_64 is fully specified;
// the std distributions and std::shuffle are not, so they are avoided here.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  bool coin() { return (engine_() >> 63) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // First k elements of a seeded shuffle of v.
  template <typename T>
  std::vector<T> sample(std::vector<T> v, std::size_t k) {
    shuffle(v);
    v.resize(k < v.size() ? k : v.size());
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace laydef
