#pragma once

// Basic value types shared by every module: points and vectors of C^n,
// the error type, and a couple of numeric helpers.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kob {

using cplx = std::complex<double>;

inline constexpr std::size_t kMaxDim = 4;
inline constexpr double kPi = 3.14159265358979323846;

enum class Errc {
    InvalidInput,
    PointOutsideDomain,
    ProjectionDiverged,
    ProjectionAmbiguous,
    NoBoundaryHit,
    NotConvex,
    SeparationViolated,
    UnsupportedDomain,
    NegativeBracket,
    SegmentExitsDomain,
    InconsistentBounds,
    GraphDisconnected,
    IterationBudgetExhausted,
    NotCertifiable,
    MatrixInconsistent,
    Inconclusive,
    NotStabilized,
    InsufficientSpread,
    ParseError,
};

inline std::string_view errc_name(Errc e)
{
    switch (e) {
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::PointOutsideDomain: return "PointOutsideDomain";
    case Errc::ProjectionDiverged: return "ProjectionDiverged";
    case Errc::ProjectionAmbiguous: return "ProjectionAmbiguous";
    case Errc::NoBoundaryHit: return "NoBoundaryHit";
    case Errc::NotConvex: return "NotConvex";
    case Errc::SeparationViolated: return "SeparationViolated";
    case Errc::UnsupportedDomain: return "UnsupportedDomain";
    case Errc::NegativeBracket: return "NegativeBracket";
    case Errc::SegmentExitsDomain: return "SegmentExitsDomain";
    case Errc::InconsistentBounds: return "InconsistentBounds";
    case Errc::GraphDisconnected: return "GraphDisconnected";
    case Errc::IterationBudgetExhausted: return "IterationBudgetExhausted";
    case Errc::NotCertifiable: return "NotCertifiable";
    case Errc::MatrixInconsistent: return "MatrixInconsistent";
    case Errc::Inconclusive: return "Inconclusive";
    case Errc::NotStabilized: return "NotStabilized";
    case Errc::InsufficientSpread: return "InsufficientSpread";
    case Errc::ParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code)
    {
    }
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what)
{
    if (!cond) fail(Errc::InvalidInput, what);
}

namespace detail {

// Fixed-capacity tuple of complex numbers. Tag separates points from vectors.
template <class Tag>
class CTuple {
public:
    CTuple() = default;
    explicit CTuple(std::size_t n) : n_(n)
    {
        require(n >= 1 && n <= kMaxDim, "dimension must be in [1, 4]");
    }
    CTuple(std::initializer_list<cplx> values) : CTuple(values.size())
    {
        std::copy(values.begin(), values.end(), c_.begin());
    }

    std::size_t dim() const noexcept { return n_; }
    cplx& operator[](std::size_t i) { return c_[i]; }
    const cplx& operator[](std::size_t i) const { return c_[i]; }
    const cplx* begin() const { return c_.data(); }
    const cplx* end() const { return c_.data() + n_; }

    double norm2() const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) s += std::norm(c_[i]);
        return s;
    }
    double norm() const { return std::sqrt(norm2()); }

    bool finite() const
    {
        for (std::size_t i = 0; i < n_; ++i)
            if (!std::isfinite(c_[i].real()) || !std::isfinite(c_[i].imag())) return false;
        return true;
    }

    // Real coordinates (Re z1, Im z1, Re z2, ...).
    double real_coord(std::size_t k) const { return k % 2 == 0 ? c_[k / 2].real() : c_[k / 2].imag(); }
    void set_real_coord(std::size_t k, double v)
    {
        if (k % 2 == 0)
            c_[k / 2].real(v);
        else
            c_[k / 2].imag(v);
    }

    friend bool operator==(const CTuple& a, const CTuple& b)
    {
        if (a.n_ != b.n_) return false;
        for (std::size_t i = 0; i < a.n_; ++i)
            if (a.c_[i] != b.c_[i]) return false;
        return true;
    }

protected:
    std::array<cplx, kMaxDim> c_{};
    std::size_t n_ = 0;
};

struct PointTag {};
struct VectorTag {};

} // namespace detail

class CVector : public detail::CTuple<detail::VectorTag> {
public:
    using CTuple::CTuple;

    static CVector basis(std::size_t n, std::size_t k)
    {
        CVector v(n);
        v[k] = 1.0;
        return v;
    }

    CVector& operator+=(const CVector& o)
    {
        for (std::size_t i = 0; i < n_; ++i) c_[i] += o[i];
        return *this;
    }
    CVector& operator-=(const CVector& o)
    {
        for (std::size_t i = 0; i < n_; ++i) c_[i] -= o[i];
        return *this;
    }
    CVector& operator*=(cplx a)
    {
        for (std::size_t i = 0; i < n_; ++i) c_[i] *= a;
        return *this;
    }
    CVector normalized() const
    {
        const double r = norm();
        require(r > 0.0, "cannot normalize a zero vector");
        CVector v = *this;
        v *= 1.0 / r;
        return v;
    }
};

class CPoint : public detail::CTuple<detail::PointTag> {
public:
    using CTuple::CTuple;

    static CPoint origin(std::size_t n) { return CPoint(n); }

    CPoint& operator+=(const CVector& v)
    {
        for (std::size_t i = 0; i < n_; ++i) c_[i] += v[i];
        return *this;
    }
    CPoint& operator-=(const CVector& v)
    {
        for (std::size_t i = 0; i < n_; ++i) c_[i] -= v[i];
        return *this;
    }
};

inline CVector operator+(CVector a, const CVector& b) { return a += b; }
inline CVector operator-(CVector a, const CVector& b) { return a -= b; }
inline CVector operator-(CVector a)
{
    a *= -1.0;
    return a;
}
inline CVector operator*(cplx s, CVector v) { return v *= s; }
inline CVector operator*(double s, CVector v) { return v *= s; }
inline CPoint operator+(CPoint p, const CVector& v) { return p += v; }
inline CPoint operator-(CPoint p, const CVector& v) { return p -= v; }

inline CVector operator-(const CPoint& a, const CPoint& b)
{
    CVector v(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) v[i] = a[i] - b[i];
    return v;
}

inline CVector as_vector(const CPoint& p)
{
    CVector v(p.dim());
    for (std::size_t i = 0; i < p.dim(); ++i) v[i] = p[i];
    return v;
}

inline CPoint as_point(const CVector& v)
{
    CPoint p(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i) p[i] = v[i];
    return p;
}

/// Hermitian product <a, b> = sum a_i conj(b_i).
template <class A, class B>
cplx hdot(const A& a, const B& b)
{
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * std::conj(b[i]);
    return s;
}

/// Euclidean inner product of the underlying real vectors.
template <class A, class B>
double rdot(const A& a, const B& b)
{
    return hdot(a, b).real();
}

inline double distance(const CPoint& a, const CPoint& b) { return (a - b).norm(); }

inline CPoint lerp(const CPoint& a, const CPoint& b, double t) { return a + t * (b - a); }

inline CPoint midpoint(const CPoint& a, const CPoint& b) { return lerp(a, b, 0.5); }

/// Numerically stable artanh for arguments in [0, 1) given 1 - s separately.
inline double artanh_from_complement(double s, double one_minus_s)
{
    return 0.5 * std::log1p(s) - 0.5 * std::log(one_minus_s);
}

inline double rel_diff(double a, double b)
{
    const double m = std::max(std::abs(a), std::abs(b));
    return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

} // namespace kob
