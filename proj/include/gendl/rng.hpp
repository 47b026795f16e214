#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gendl {

// splitmix64 finalizer. Used for sub-seed derivation so that every random
// stream in the pipeline hangs off one master seed.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Sub-seed for stream `stream` of a master seed. Streams are documented at
// each call site; the same (master, stream) pair always yields the same seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master + stream * 0x9E3779B97F4A7C15ull);
}

// Seeded generator with hand-rolled conversions so results do not depend on
// the standard library's distribution implementations.
class rng {
  public:
    explicit rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // [lo, hi)
    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // [0, n), n >= 1
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Uniform point in the disk of radius r, by rejection.
    void in_disk(double r, double& dx, double& dy) {
        if (r <= 0.0) {
            dx = dy = 0.0;
            return;
        }
        do {
            dx = range(-r, r);
            dy = range(-r, r);
        } while (dx * dx + dy * dy > r * r);
    }

    bool bernoulli(double p) { return unit() < p; }

  private:
    std::mt19937_64 eng_;
};

}  // namespace gendl
