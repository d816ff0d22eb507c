#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace driftbench {

// Deterministic random source used everywhere randomness is needed.
//
// Raw mt19937_64 output is mapped to doubles and bounded integers here rather
// than through <random> distribution objects, whose output sequences are
// implementation-defined; run logs must replay bit-identically.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::size_t below(std::size_t n) {
        assert(n > 0);
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t threshold = (~un + 1) % un; // (2^64 - n) mod n
        std::uint64_t r = gen_();
        while (r < threshold) r = gen_();
        return static_cast<std::size_t>(r % un);
    }

    // Standard normal via Box-Muller. Two uniforms per draw, no cached spare,
    // so the consumed stream length is a pure function of the call count.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    std::string save_state() const {
        std::ostringstream os;
        os << gen_;
        return os.str();
    }

    void restore_state(const std::string& s) {
        std::istringstream is(s);
        is >> gen_;
    }

    bool operator==(const Rng& other) const { return gen_ == other.gen_; }

  private:
    static constexpr double kTwoPi = 6.283185307179586476925286766559;
    std::mt19937_64 gen_;
};

// Derives an independent stream seed from a base seed and a tag (splitmix64
// finalizer). Used to decouple e.g. buffer sampling from batch sampling.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace driftbench
