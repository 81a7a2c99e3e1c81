#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "kob/core.hpp"

namespace kob {

// Closed interval [lo, hi] carrying two-sided bounds on a quantity.
// Arithmetic is plain endpoint arithmetic; no directed rounding.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    constexpr explicit Interval(double v) : lo(v), hi(v) {}
    Interval(double l, double h) : lo(l), hi(h)
    {
        require(!(l > h), "interval endpoints out of order");
    }

    static Interval point(double v) { return Interval(v); }
    static Interval hull(double a, double b) { return Interval(std::min(a, b), std::max(a, b)); }

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double v, double slack = 0.0) const { return v >= lo - slack && v <= hi + slack; }
    bool is_point() const { return lo == hi; }

    Interval& operator+=(const Interval& o)
    {
        lo += o.lo;
        hi += o.hi;
        return *this;
    }
};

inline Interval operator+(Interval a, const Interval& b) { return a += b; }
inline Interval operator-(const Interval& a, const Interval& b) { return Interval(a.lo - b.hi, a.hi - b.lo); }
inline Interval operator*(double s, const Interval& a)
{
    return s >= 0.0 ? Interval(s * a.lo, s * a.hi) : Interval(s * a.hi, s * a.lo);
}
inline Interval operator*(const Interval& a, double s) { return s * a; }

inline Interval hull(const Interval& a, const Interval& b)
{
    return Interval(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
}

inline Interval min(const Interval& a, const Interval& b)
{
    return Interval(std::min(a.lo, b.lo), std::min(a.hi, b.hi));
}

inline Interval max(const Interval& a, const Interval& b)
{
    return Interval(std::max(a.lo, b.lo), std::max(a.hi, b.hi));
}

/// exp is monotone, so the image interval is exact.
inline Interval exp(const Interval& a) { return Interval(std::exp(a.lo), std::exp(a.hi)); }

inline std::ostream& operator<<(std::ostream& os, const Interval& a)
{
    return os << '[' << a.lo << ", " << a.hi << ']';
}

} // namespace kob
