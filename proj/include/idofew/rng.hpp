#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace idofew {

// splitmix64 step; used to derive independent substream seeds from one base
// seed. Reports must be byte-identical across platforms, so nothing here may
// depend on implementation-defined std:: distributions.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_id) {
    std::uint64_t s = base ^ (0x632be59bd9b4e019ULL * (stream_id + 1));
    std::uint64_t a = splitmix64(s);
    return splitmix64(s) ^ a;
}

// Deterministic RNG: mt19937_64 core (fully specified by the standard) with
// hand-rolled draws, since std::uniform_*_distribution output is
// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound); bound > 0. Unbiased via rejection.
    std::uint64_t uniform_int(std::uint64_t bound) {
        const std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal via Box-Muller. The spare value is cached, so a
    // sequence of calls consumes a deterministic number of engine draws.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // [0, n) shuffled.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace idofew
