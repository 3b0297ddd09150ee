#include "loggas/rng.hpp"

#include <cmath>

namespace loggas {

namespace {
constexpr uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
}

std::array<uint32_t, 4> Rng::block(const std::array<uint32_t, 4>& counter,
                                   const std::array<uint32_t, 2>& key) {
    std::array<uint32_t, 4> c = counter;
    std::array<uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        uint64_t p0 = static_cast<uint64_t>(kM0) * c[0];
        uint64_t p1 = static_cast<uint64_t>(kM1) * c[2];
        uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
        uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

Rng::Rng(uint64_t seed, uint64_t stream) : stream_(stream) {
    key_ = {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
}

uint32_t Rng::next_u32() {
    if (buf_pos_ >= 4) {
        std::array<uint32_t, 4> counter = {
            static_cast<uint32_t>(position_), static_cast<uint32_t>(position_ >> 32),
            static_cast<uint32_t>(stream_), static_cast<uint32_t>(stream_ >> 32)};
        buf_ = block(counter, key_);
        ++position_;
        buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
}

uint64_t Rng::next_u64() {
    uint64_t lo = next_u32(), hi = next_u32();
    return lo | (hi << 32);
}

double Rng::uniform01() {
    // 53-bit mantissa, strictly inside (0,1)
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform01(); }

double Rng::normal() {
    if (have_cached_normal_) {
        have_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = uniform01(), u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * kPi * u2;
    cached_normal_ = r * std::sin(th);
    have_cached_normal_ = true;
    return r * std::cos(th);
}

double Rng::gamma(double shape) {
    if (shape <= 0.0) throw ArgumentError("Rng::gamma: shape must be positive");
    if (shape < 1.0) {
        // boost to shape+1 and scale back
        double g = gamma(shape + 1.0);
        double u = uniform01();
        return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Rng::chi(double k) { return std::sqrt(2.0 * gamma(0.5 * k)); }

}  // namespace loggas
