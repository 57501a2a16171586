#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

// Pinned pseudo-random source for initial latents and derived constants:
// xoshiro256++ seeded via SplitMix64, standard normals via Box-Muller on
// 53-bit uniforms. Same seed, same stream, on every platform; the uniform
// integer stream is bit-exact by construction, the normal values only
// depend on libm's log/cos/sin in double precision.

namespace eosedit {

class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    uint64_t state_;
};

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& s : s_) s = sm.next();
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1) with 53 bits of precision
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // one Box-Muller pair
    void normal_pair(double& z0, double& z1) {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        const double a = 2.0 * M_PI * u2;
        z0 = r * std::cos(a);
        z1 = r * std::sin(a);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

// Fill with f32 standard normals, consuming whole Box-Muller pairs in order
// (z0, z1); a trailing odd element discards its pair partner.
inline void fill_normal_f32(Xoshiro256pp& gen, float* out, size_t n) {
    size_t i = 0;
    while (i + 1 < n) {
        double z0, z1;
        gen.normal_pair(z0, z1);
        out[i++] = static_cast<float>(z0);
        out[i++] = static_cast<float>(z1);
    }
    if (i < n) {
        double z0, z1;
        gen.normal_pair(z0, z1);
        out[i] = static_cast<float>(z0);
    }
}

inline std::vector<float> normal_f32(uint64_t seed, size_t n) {
    Xoshiro256pp gen(seed);
    std::vector<float> out(n);
    fill_normal_f32(gen, out.data(), n);
    return out;
}

}  // namespace eosedit
