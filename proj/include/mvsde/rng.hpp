#pragma once

#include <cmath>
#include <cstdint>

namespace mvsde {

// Splittable counter-based generator. Every draw is a pure function of
// (master seed, stream, counter): stream s gets the splitmix64 sequence
// started at mix(seed ^ GOLDEN*(s+1)), so streams never share state and
// any draw can be reproduced from its indices alone. Stream assignment
// convention: particle i of the primary ensemble uses stream i; an
// independent copy offsets streams by N.
class SplitRng {
public:
    SplitRng(std::uint64_t master_seed, std::uint64_t stream)
        : state_(mix(master_seed ^ (GOLDEN * (stream + 1)))), have_spare_(false) {}

    std::uint64_t next_u64() {
        state_ += GOLDEN;
        return mix(state_);
    }

    // Uniform on (0,1]. Never returns 0, so log() below is safe.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; both outputs of a pair are used.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static constexpr std::uint64_t GOLDEN = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
    bool have_spare_;
    double spare_ = 0.0;
};

} // namespace mvsde
