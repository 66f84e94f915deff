#pragma once

#include <cstdint>
#include <random>

namespace boed {

// One substream per outer index carries, in order, theta_n, the noise of Y_n,
// the MAP start candidates and the inner samples.
enum class Stream : std::uint64_t {
    outer = 1,
    pilot = 5,
    replicate = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic child seed of (root, index, stream).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index, Stream stream);

// SplitMix64 as a uniform random bit generator. Seeding is a single word,
// which keeps per-outer substreams cheap.
class SplitMixEngine {
  public:
    using result_type = std::uint64_t;

    explicit SplitMixEngine(std::uint64_t seed) : state_(seed) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() {
        const result_type out = splitmix64(state_);
        state_ += 0x9e3779b97f4a7c15ULL;
        return out;
    }

  private:
    std::uint64_t state_;
};

class RandomSource {
  public:
    explicit RandomSource(std::uint64_t seed) : engine_(seed) {}
    RandomSource(std::uint64_t root, std::uint64_t index, Stream stream)
        : engine_(derive_seed(root, index, stream)) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    SplitMixEngine& engine() { return engine_; }

  private:
    SplitMixEngine engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace boed
