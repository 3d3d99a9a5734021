#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace nmfpack {

// xoshiro256++ (Blackman & Vigna), seeded through splitmix64.
// Chosen over std::mt19937 + <random> distributions because the stream of
// doubles below is fully pinned by this header: identical seeds give
// identical instances on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            // splitmix64 step
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53 mantissa bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller on two uniforms
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        have_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    std::size_t uniform_index(std::size_t n) {
        // modulo bias is irrelevant at the sizes used here
        return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
    }

    // point on the standard simplex (normalized exponentials)
    std::vector<double> simplex_point(std::size_t n) {
        std::vector<double> v(n);
        double sum = 0.0;
        for (auto& e : v) {
            double u = uniform();
            while (u <= 0.0) u = uniform();
            e = -std::log(u);
            sum += e;
        }
        for (auto& e : v) e /= sum;
        return v;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace nmfpack
