#pragma once

#include <cstdint>
#include <cstring>
#include <cmath>
#include <span>
#include <string_view>

namespace isolab {

// 64-bit FNV-1a, used to turn operation tags into stream ids.
constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Seed of a deterministic random stream.  Streams are split, never shared:
/// chunk i of an operation tagged `op` uses child(op, i), so results are
/// reproducible for a fixed master seed at any degree of parallelism.
struct Seed {
    std::uint64_t master = 0;
    std::uint64_t stream = 0;

    Seed child(std::string_view opTag, std::uint64_t index = 0) const {
        std::uint64_t s = master;
        std::uint64_t a = splitmix64(s);
        s ^= fnv1a(opTag);
        std::uint64_t b = splitmix64(s);
        s ^= stream + 0x9e3779b97f4a7c15ull * (index + 1);
        std::uint64_t c = splitmix64(s);
        return Seed{master, a ^ (b * 3) ^ (c * 5)};
    }
};

/// xoshiro256** with splitmix64 initialization.  All variate generation is
/// implemented here (not with std::<distribution>) so that output is
/// bit-identical across standard libraries.
class Rng {
public:
    explicit Rng(Seed seed) {
        std::uint64_t s = seed.master ^ (0x6a09e667f3bcc909ull + seed.stream);
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next_u64() {
        std::uint64_t* s = state_;
        std::uint64_t result = rotl(s[1] * 5, 7) * 9;
        std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // uniform on [0,1), 53-bit mantissa
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0,1], safe as a log() argument
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential() { return -std::log(uniform_pos()); }

    // Box-Muller; the pair is consumed in full so vector fills
    // use a fixed number of draws regardless of call history.
    void normal_pair(double& a, double& b) {
        double r = std::sqrt(2.0 * exponential());
        double t = 6.283185307179586476925286766559 * uniform();
        a = r * std::cos(t);
        b = r * std::sin(t);
    }

    double normal() {
        double a, b;
        normal_pair(a, b);
        return a;
    }

    void fill_normal(std::span<double> out) {
        std::size_t i = 0;
        for (; i + 1 < out.size(); i += 2) normal_pair(out[i], out[i + 1]);
        if (i < out.size()) out[i] = normal();
    }

    // +1 or -1 with equal probability
    double sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

    // uniform over {0, ..., m-1} by rejection, bias-free
    std::uint64_t below(std::uint64_t m) {
        std::uint64_t threshold = (0 - m) % m;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % m;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

}  // namespace isolab
