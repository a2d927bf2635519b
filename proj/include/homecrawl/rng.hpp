#pragma once

#include <cmath>
#include <cstdint>

namespace homecrawl {

// splitmix64, used for seeding and deriving sub-streams.
inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// xorshift64* generator. Deterministic across platforms; test vectors are
// pinned in the test suite.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t s = seed;
        state_ = splitmix64(s);
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
    }

    // Derive an independent stream, e.g. per tree or per trace.
    static Rng derive(uint64_t seed, uint64_t stream) {
        uint64_t s = seed;
        uint64_t base = splitmix64(s);
        uint64_t t = base ^ (stream + 0x632BE59BD9B4E019ull);
        return Rng(splitmix64(t));
    }

    uint64_t next() {
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1Dull;
    }

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    uint64_t uniform_int(uint64_t n) { return next() % n; }

    // Box-Muller; one value per call, the pair partner is discarded to keep
    // the stream position independent of call parity.
    double gaussian(double mean, double stddev) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586 * u2);
    }

private:
    explicit Rng(uint64_t raw, int) : state_(raw ? raw : 1) {}
    uint64_t state_;
};

}  // namespace homecrawl
