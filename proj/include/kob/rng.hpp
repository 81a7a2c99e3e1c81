#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
// A stream is keyed by (seed, stream id, sample index), so every sample draws
// the same numbers no matter which thread evaluates it or in which order.

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "kob/core.hpp"

namespace kob {

namespace philox {

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kM0 = 0xD2511F53u;
inline constexpr std::uint32_t kM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline Block round(const Block& c, const Key& k)
{
    const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline Block philox4x32_10(Block ctr, Key key)
{
    ctr = round(ctr, key);
    for (int r = 1; r < 10; ++r) {
        key[0] += kW0;
        key[1] += kW1;
        ctr = round(ctr, key);
    }
    return ctr;
}

} // namespace philox

/// FNV-1a, used to turn scenario names into stream ids.
inline std::uint32_t stream_id(std::string_view name)
{
    std::uint32_t h = 2166136261u;
    for (char ch : name) {
        h ^= static_cast<unsigned char>(ch);
        h *= 16777619u;
    }
    return h;
}

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint32_t stream, std::uint64_t index)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          index_(index), stream_(stream)
    {
    }

    std::uint32_t next_u32()
    {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    std::uint64_t next_u64()
    {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1], safe for logarithms.
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Uniform in [0, n).
    std::size_t below(std::size_t n)
    {
        require(n > 0, "below(0)");
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    // Box-Muller; the cached second variate keeps the sequence reproducible.
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double t = 2.0 * kPi * uniform();
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Uniform direction on the unit sphere of C^n.
    CVector unit_vector(std::size_t n)
    {
        CVector v(n);
        do {
            for (std::size_t i = 0; i < n; ++i) v[i] = cplx(normal(), normal());
        } while (v.norm() < 1e-12);
        return v.normalized();
    }

    /// Uniform point in the unit ball of C^n.
    CPoint in_unit_ball(std::size_t n)
    {
        const CVector u = unit_vector(n);
        const double r = std::pow(uniform(), 1.0 / static_cast<double>(2 * n));
        return as_point(r * u);
    }

private:
    void refill()
    {
        const philox::Block ctr{static_cast<std::uint32_t>(counter_),
                                static_cast<std::uint32_t>(index_),
                                static_cast<std::uint32_t>(index_ >> 32), stream_};
        buf_ = philox::philox4x32_10(ctr, key_);
        ++counter_;
        pos_ = 0;
    }

    philox::Key key_;
    std::uint64_t index_;
    std::uint32_t stream_;
    std::uint64_t counter_ = 0;
    philox::Block buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace kob
