#pragma once

// Bounded domains Omega = {rho < 0} in C^n and their boundary geometry.
//
// Coordinates are kept native (the unit ball really has radius 1); the
// Euclidean diameter is recorded in diameter_scale for reporting.

#include <Eigen/Dense>

#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "kob/core.hpp"
#include "kob/expr.hpp"
#include "kob/parallel.hpp"
#include "kob/rng.hpp"

namespace kob {

using CMatrix = std::array<std::array<cplx, kMaxDim>, kMaxDim>;

/// rho with its Wirtinger derivatives. hzz[j][k] = d2 rho / dz_j dz_k,
/// hzzbar[j][k] = d2 rho / dz_j dzbar_k.
class DefiningFunction {
public:
    virtual ~DefiningFunction() = default;
    virtual std::size_t dim() const = 0;
    virtual double value(const CPoint& z) const = 0;
    virtual CVector dz(const CPoint& z) const = 0;
    virtual void hessians(const CPoint& z, CMatrix& hzz, CMatrix& hzzbar) const = 0;
    virtual std::string formula() const = 0;
};

/// rho = |z|^2 - 1 + a Re(z1^p); a = 0 gives the unit sphere.
class PerturbedSphere final : public DefiningFunction {
public:
    PerturbedSphere(std::size_t n, double a = 0.0, int p = 0) : n_(n), a_(a), p_(p)
    {
        require(n >= 1 && n <= kMaxDim, "dimension must be in [1, 4]");
        require(a == 0.0 || p >= 2, "perturbation power must be >= 2");
    }

    std::size_t dim() const override { return n_; }

    double value(const CPoint& z) const override
    {
        double v = z.norm2() - 1.0;
        if (a_ != 0.0) v += a_ * std::pow(z[0], p_).real();
        return v;
    }

    CVector dz(const CPoint& z) const override
    {
        CVector g(n_);
        for (std::size_t k = 0; k < n_; ++k) g[k] = std::conj(z[k]);
        if (a_ != 0.0) g[0] += 0.5 * a_ * p_ * std::pow(z[0], p_ - 1);
        return g;
    }

    void hessians(const CPoint& z, CMatrix& hzz, CMatrix& hzzbar) const override
    {
        hzz = {};
        hzzbar = {};
        for (std::size_t k = 0; k < n_; ++k) hzzbar[k][k] = 1.0;
        if (a_ != 0.0) hzz[0][0] = 0.5 * a_ * p_ * (p_ - 1) * std::pow(z[0], p_ - 2);
    }

    std::string formula() const override
    {
        std::ostringstream os;
        os << "abs2(z1)";
        for (std::size_t k = 1; k < n_; ++k) os << " + abs2(z" << k + 1 << ")";
        os << " - 1";
        if (a_ != 0.0) os << " + " << a_ << "*re(z1^" << p_ << ")";
        return os.str();
    }

private:
    std::size_t n_;
    double a_;
    int p_;
};

/// rho = |z1|^2 + |z2|^(2m) - 1.
class EllipsoidFunction final : public DefiningFunction {
public:
    explicit EllipsoidFunction(int m) : m_(m) { require(m >= 1, "ellipsoid exponent must be >= 1"); }

    std::size_t dim() const override { return 2; }

    double value(const CPoint& z) const override { return std::norm(z[0]) + ipow(std::norm(z[1]), m_) - 1.0; }

    CVector dz(const CPoint& z) const override
    {
        const double s = std::norm(z[1]);
        return CVector{std::conj(z[0]), m_ * ipow(s, m_ - 1) * std::conj(z[1])};
    }

    void hessians(const CPoint& z, CMatrix& hzz, CMatrix& hzzbar) const override
    {
        hzz = {};
        hzzbar = {};
        const double s = std::norm(z[1]);
        hzzbar[0][0] = 1.0;
        hzzbar[1][1] = static_cast<double>(m_) * m_ * ipow(s, m_ - 1);
        if (m_ >= 2) {
            const cplx zb = std::conj(z[1]);
            hzz[1][1] = static_cast<double>(m_) * (m_ - 1) * ipow(s, m_ - 2) * zb * zb;
        }
    }

    std::string formula() const override
    {
        return "abs2(z1) + abs2(z2)^" + std::to_string(m_) + " - 1";
    }

    int exponent() const { return m_; }

private:
    static double ipow(double b, int e)
    {
        double r = 1.0;
        for (int i = 0; i < e; ++i) r *= b;
        return r;
    }

    int m_;
};

/// Defining function given as an expression; derivatives are symbolic.
class ExpressionFunction final : public DefiningFunction {
public:
    ExpressionFunction(const std::string& src, std::size_t n) : src_(src), n_(n)
    {
        require(n >= 1 && n <= kMaxDim, "dimension must be in [1, 4]");
        const expr::NodePtr root = expr::parse(src);
        if (expr::max_var(root) >= static_cast<int>(n))
            fail(Errc::ParseError, "expression uses a coordinate beyond dimension " + std::to_string(n));
        value_ = expr::Program(root);
        for (std::size_t j = 0; j < n; ++j) {
            const expr::NodePtr dj = expr::derivative(root, static_cast<int>(j), false);
            dz_[j] = expr::Program(dj);
            for (std::size_t k = 0; k < n; ++k) {
                hzz_[j][k] = expr::Program(expr::derivative(dj, static_cast<int>(k), false));
                hzzbar_[j][k] = expr::Program(expr::derivative(dj, static_cast<int>(k), true));
            }
        }
        CPoint probe(n);
        for (std::size_t k = 0; k < n; ++k) probe[k] = cplx(0.3 / (k + 1), -0.2 / (k + 2));
        const cplx v = value_.eval(probe);
        if (std::abs(v.imag()) > 1e-9 * (1.0 + std::abs(v.real())))
            fail(Errc::InvalidInput, "defining function is not real-valued: " + src);
    }

    std::size_t dim() const override { return n_; }
    double value(const CPoint& z) const override { return value_.eval(z).real(); }

    CVector dz(const CPoint& z) const override
    {
        CVector g(n_);
        for (std::size_t k = 0; k < n_; ++k) g[k] = dz_[k].eval(z);
        return g;
    }

    void hessians(const CPoint& z, CMatrix& hzz, CMatrix& hzzbar) const override
    {
        hzz = {};
        hzzbar = {};
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t k = 0; k < n_; ++k) {
                hzz[j][k] = hzz_[j][k].eval(z);
                hzzbar[j][k] = hzzbar_[j][k].eval(z);
            }
    }

    std::string formula() const override { return src_; }

private:
    std::string src_;
    std::size_t n_;
    expr::Program value_;
    std::array<expr::Program, kMaxDim> dz_;
    std::array<std::array<expr::Program, kMaxDim>, kMaxDim> hzz_, hzzbar_;
};

// Real-variable calculus in the coordinates (x1, y1, x2, y2, ...).

// Real coordinates with room for one multiplier: fixed capacity, no heap.
inline constexpr int kRealCap = 2 * static_cast<int>(kMaxDim) + 1;
using RealVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kRealCap, 1>;
using RealMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kRealCap, kRealCap>;

/// Real gradient packed as a complex vector: d/dx_k + i d/dy_k = 2 conj(d rho/dz_k).
inline CVector real_gradient(const DefiningFunction& f, const CPoint& z)
{
    CVector g = f.dz(z);
    for (std::size_t k = 0; k < g.dim(); ++k) g[k] = 2.0 * std::conj(g[k]);
    return g;
}

inline RealMat real_hessian(const DefiningFunction& f, const CPoint& z)
{
    const std::size_t n = f.dim();
    CMatrix a, b;
    f.hessians(z, a, b);
    RealMat h(2 * n, 2 * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            h(2 * j, 2 * k) = 2.0 * (a[j][k] + b[j][k]).real();
            h(2 * j + 1, 2 * k + 1) = 2.0 * (b[j][k] - a[j][k]).real();
            h(2 * j, 2 * k + 1) = 2.0 * (b[j][k] - a[j][k]).imag();
            h(2 * j + 1, 2 * k) = 2.0 * (b[k][j] - a[k][j]).imag();
        }
    return h;
}

template <class T>
RealVec to_real(const T& z)
{
    RealVec x(2 * z.dim());
    for (std::size_t k = 0; k < 2 * z.dim(); ++k) x(k) = z.real_coord(k);
    return x;
}

template <class T>
T from_real(const RealVec& x)
{
    T z(static_cast<std::size_t>(x.size()) / 2);
    for (std::size_t k = 0; k < static_cast<std::size_t>(x.size()); ++k) z.set_real_coord(k, x(k));
    return z;
}

// Domain description.

enum class DomainKind { UnitDisk, UnitBall, ComplexEllipsoid, GeneralDefining };

inline std::string_view kind_name(DomainKind k)
{
    switch (k) {
    case DomainKind::UnitDisk: return "UnitDisk";
    case DomainKind::UnitBall: return "UnitBall";
    case DomainKind::ComplexEllipsoid: return "ComplexEllipsoid";
    case DomainKind::GeneralDefining: return "GeneralDefining";
    }
    return "?";
}

/// Constants of the strongly pseudoconvex estimates.
struct BBConfig {
    double epsilon = 0.1;  // Levi slack
    double epsilon0 = 0.2; // collar width
    double C_bb = 0.5;     // multiplicative slack 1 +- C delta^(1/2)
    double C_lower = 0.5;  // K >= |log ratio|/2 - C_lower
    double C1 = 0.5;       // k >= C1 |v| / delta^(1/2)

    void validate() const
    {
        require(std::isfinite(epsilon) && epsilon > 0.0 && epsilon < 1.0, "BBConfig.epsilon must lie in (0,1)");
        require(std::isfinite(epsilon0) && epsilon0 > 0.0, "BBConfig.epsilon0 must be positive");
        require(std::isfinite(C_bb) && C_bb >= 0.0, "BBConfig.C_bb must be >= 0");
        require(std::isfinite(C_lower) && C_lower >= 0.0, "BBConfig.C_lower must be >= 0");
        require(std::isfinite(C1) && C1 > 0.0, "BBConfig.C1 must be positive");
    }
};

struct ConvexClass {
    double m = 1.0;
    std::optional<double> C; // empty: to be audited
};

struct SPSCClass {
    BBConfig bb;
};

using Classification = std::variant<ConvexClass, SPSCClass>;

struct BoundaryPoint {
    CPoint point;
    CVector inner_normal;
    CPoint source;
};

/// Real hyperplane Re<w - anchor, normal> = 0; it contains the complex
/// hyperplane <w - anchor, normal> = 0.
struct Hyperplane {
    CPoint anchor;
    CVector normal;

    /// Euclidean distance from x to the complex hyperplane.
    double complex_distance(const CPoint& x) const { return std::abs(hdot(x - anchor, normal)); }
};

struct DomainSpec {
    DomainKind kind = DomainKind::GeneralDefining;
    std::string id;
    std::shared_ptr<const DefiningFunction> rho;
    Classification classification;
    int exponent = 1;              // ComplexEllipsoid only
    double bounding_radius = 2.0;  // Omega is the component of {rho<0} inside this ball
    CPoint reference;              // interior point with rho < 0
    double nikolov_A = 2.0;        // default A-hat for the upper distance bound

    // Derived by finalize().
    double diameter_scale = 1.0;
    CPoint deep_point;
    double inradius = 0.0;
    std::vector<BoundaryPoint> boundary_pool; // farthest-point samples, convex only

    std::size_t dim() const { return rho->dim(); }

    const ConvexClass* convex() const { return std::get_if<ConvexClass>(&classification); }
    const SPSCClass* spsc() const { return std::get_if<SPSCClass>(&classification); }
    bool is_convex() const { return convex() != nullptr; }
    bool is_ball_like() const { return kind == DomainKind::UnitDisk || kind == DomainKind::UnitBall; }

    /// rho, with points beyond the bounding ball reported as exterior.
    double level(const CPoint& z) const
    {
        if (z.norm2() >= bounding_radius * bounding_radius) return 1.0;
        return rho->value(z);
    }

    bool contains(const CPoint& z) const
    {
        return z.dim() == dim() && z.finite() && level(z) < 0.0;
    }

    double boundary_tolerance() const { return 1e-10 * diameter_scale; }

    DomainSpec with_classification(Classification c) const
    {
        DomainSpec d = *this;
        d.classification = std::move(c);
        if (const SPSCClass* s = d.spsc()) s->bb.validate();
        return d;
    }
};

inline void require_inside(const DomainSpec& D, const CPoint& z)
{
    require(z.dim() == D.dim(), "point dimension does not match the domain");
    if (!D.contains(z)) fail(Errc::PointOutsideDomain, "point is not in the domain");
}

namespace detail {

/// Root of t -> level(z + t w) in [lo, hi] with level(lo) < 0 <= level(hi);
/// Newton steps safeguarded by bisection.
inline double ray_root(const DomainSpec& D, const CPoint& z, const CVector& w, double lo, double hi)
{
    const DefiningFunction& f = *D.rho;
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const CPoint p = z + t * w;
        const double val = D.level(p);
        if (val < 0.0)
            lo = t;
        else
            hi = t;
        if (hi - lo <= 4e-16 * (1.0 + hi)) break;
        double next = std::numeric_limits<double>::quiet_NaN();
        if (val != 1.0 || p.norm2() < D.bounding_radius * D.bounding_radius) {
            const CVector d = f.dz(p);
            double slope = 0.0;
            for (std::size_t k = 0; k < d.dim(); ++k) slope += (d[k] * w[k]).real();
            slope *= 2.0;
            if (slope > 0.0) next = t - val / slope;
        }
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= 1e-16 * (1.0 + t)) {
            t = next;
            break;
        }
        t = next;
    }
    return t;
}

/// Distance from z to the first boundary crossing along the unit direction w.
/// Star-shaped (convex) domains use an expanding bracket from `guess`;
/// otherwise the ray is marched from z so the first crossing is not skipped.
/// With a finite cap, crossings beyond t_cap are reported as NoBoundaryHit.
inline double first_hit(const DomainSpec& D, const CPoint& z, const CVector& w, double guess, bool star,
                        double t_cap = std::numeric_limits<double>::infinity())
{
    const double t_max = std::min(z.norm() + D.bounding_radius, t_cap);
    if (t_cap < std::numeric_limits<double>::infinity() && D.level(z + t_max * w) < 0.0 && star)
        fail(Errc::NoBoundaryHit, "no boundary crossing within the cap");
    double lo = 0.0, hi = 0.0;
    if (star) {
        double t = guess > 0.0 ? guess : 0.25 * D.bounding_radius;
        if (D.level(z + t * w) < 0.0) {
            lo = t;
            hi = std::min(t * 1.25, t_max);
            double grow = 1.25;
            while (D.level(z + hi * w) < 0.0) {
                if (hi >= t_max) fail(Errc::NoBoundaryHit, "complex line misses the boundary");
                lo = hi;
                grow *= 1.5;
                hi = std::min(hi * grow, t_max);
            }
        } else {
            hi = t;
            lo = 0.8 * t;
            while (D.level(z + lo * w) >= 0.0) {
                hi = lo;
                lo *= 0.25;
                if (lo < 1e-300) {
                    lo = 0.0;
                    break;
                }
            }
        }
    } else {
        const double h = std::min(D.bounding_radius / 256.0, t_max / 64.0);
        double t = 0.0;
        for (;;) {
            const double next = std::min(t + h, t_max);
            if (D.level(z + next * w) >= 0.0) {
                lo = t;
                hi = next;
                break;
            }
            if (next >= t_max) fail(Errc::NoBoundaryHit, "complex line misses the boundary");
            t = next;
        }
    }
    return ray_root(D, z, w, lo, hi);
}

struct ProjectionCandidate {
    CPoint point;
    double dist = 0.0;
};

/// Stationarity residual of xi as a nearest point to c: tangential part of xi - c.
inline double tangential_residual(const RealVec& r, const RealVec& g)
{
    const RealVec n = g.normalized();
    return (r - r.dot(n) * n).norm();
}

inline void restore_feasibility(const DefiningFunction& f, RealVec& x)
{
    for (int i = 0; i < 4; ++i) {
        const CPoint p = from_real<CPoint>(x);
        const double v = f.value(p);
        const RealVec g = to_real(real_gradient(f, p));
        if (g.squaredNorm() == 0.0) return;
        x -= (v / g.squaredNorm()) * g;
        if (std::abs(v) <= 1e-16) return;
    }
}

inline bool is_local_min(const DefiningFunction& f, const RealVec& x, double mu)
{
    const CPoint p = from_real<CPoint>(x);
    const RealVec g = to_real(real_gradient(f, p));
    const RealVec n = g.normalized();
    const Eigen::Index d = x.size();
    RealMat m = RealMat::Identity(d, d) + mu * real_hessian(f, p);
    const RealMat proj = RealMat::Identity(d, d) - n * n.transpose();
    m = proj * m * proj + n * n.transpose();
    const Eigen::SelfAdjointEigenSolver<RealMat> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -1e-8;
}

/// Newton on the KKT system of min |xi - z|^2/2 s.t. rho(xi) = 0, with a
/// projected-gradient fallback. The fallback gives up once it enters the
/// basin of an already known minimizer, where it would only rediscover it.
inline std::optional<ProjectionCandidate> kkt_project(const DomainSpec& D, const CPoint& z, const CPoint& start,
                                                      const std::vector<ProjectionCandidate>& known = {})
{
    const DefiningFunction& f = *D.rho;
    const RealVec c = to_real(z);
    const Eigen::Index d = c.size();
    const double r2max = D.bounding_radius * D.bounding_radius;

    auto accept = [&](const RealVec& x, double mu) -> std::optional<ProjectionCandidate> {
        const CPoint p = from_real<CPoint>(x);
        if (!p.finite() || p.norm2() >= r2max) return std::nullopt;
        const RealVec g = to_real(real_gradient(f, p));
        const RealVec r = x - c;
        if (g.norm() == 0.0 || std::abs(f.value(p)) / g.norm() > 1e-13 * (1.0 + D.diameter_scale)) return std::nullopt;
        if (tangential_residual(r, g) > 1e-10 * std::max(1.0, r.norm())) return std::nullopt;
        if (!is_local_min(f, x, mu)) return std::nullopt;
        return ProjectionCandidate{p, r.norm()};
    };

    RealMat j(d + 1, d + 1);
    RealVec rhs(d + 1);
    auto newton = [&](RealVec x) -> std::optional<ProjectionCandidate> {
        RealVec g = to_real(real_gradient(f, from_real<CPoint>(x)));
        if (g.squaredNorm() == 0.0) return std::nullopt;
        double mu = -(x - c).dot(g) / g.squaredNorm();
        for (int it = 0; it < 60; ++it) {
            const CPoint p = from_real<CPoint>(x);
            g = to_real(real_gradient(f, p));
            j.setZero();
            j.topLeftCorner(d, d) = RealMat::Identity(d, d) + mu * real_hessian(f, p);
            j.topRightCorner(d, 1) = g;
            j.bottomLeftCorner(1, d) = g.transpose();
            rhs.head(d) = -(x - c + mu * g);
            rhs(d) = -f.value(p);
            RealVec step = j.fullPivLu().solve(rhs);
            if (!step.allFinite()) break;
            const double len = step.head(d).norm();
            const double cap = 0.5 * std::max((x - c).norm(), 0.1 * D.diameter_scale);
            if (len > cap) step *= cap / len;
            x += step.head(d);
            mu += step(d);
            if (x.squaredNorm() >= r2max) break;
            if (len <= 1e-15 * (1.0 + x.norm())) break;
        }
        restore_feasibility(f, x);
        return accept(x, mu);
    };
    if (auto hit = newton(to_real(start))) return hit;

    // Fallback: damped projected gradient from the original start. Newton is
    // retried every few steps since it converges fast once inside a minimizer's
    // basin, where the gradient steps crawl.
    RealVec x = to_real(start);
    for (int it = 1; it <= 5000; ++it) {
        const RealVec g = to_real(real_gradient(f, from_real<CPoint>(x)));
        const RealVec n = g.normalized();
        const RealVec r = x - c;
        const RealVec t = r - r.dot(n) * n;
        if (t.norm() <= 1e-11 * std::max(1.0, r.norm())) break;
        x -= 0.5 * t;
        restore_feasibility(f, x);
        if (!x.allFinite() || x.squaredNorm() >= r2max) return std::nullopt;
        for (const auto& k : known)
            if ((to_real(k.point) - x).norm() <= 1e-3 * D.diameter_scale) return std::nullopt;
        if (it % 8 == 0)
            if (auto hit = newton(x)) return hit;
    }
    const RealVec g = to_real(real_gradient(f, from_real<CPoint>(x)));
    return accept(x, -(x - c).dot(g) / g.squaredNorm());
}

/// Fixed start directions for the multi-start projection.
inline std::vector<CVector> projection_directions(std::size_t n)
{
    std::vector<CVector> dirs;
    for (std::uint64_t k = 0; k < 15; ++k) {
        CounterRng rng(0x6b6f62u, stream_id("projection-starts"), k);
        dirs.push_back(rng.unit_vector(n));
    }
    return dirs;
}

/// Distinct local minimizers of the distance to the boundary, nearest first.
inline std::vector<ProjectionCandidate> nearest_boundary(const DomainSpec& D, const CPoint& z)
{
    static const std::array<std::vector<CVector>, kMaxDim + 1> table = [] {
        std::array<std::vector<CVector>, kMaxDim + 1> t;
        for (std::size_t n = 1; n <= kMaxDim; ++n) t[n] = projection_directions(n);
        return t;
    }();
    const bool star = D.is_convex();
    std::vector<CVector> dirs;
    const CVector g = real_gradient(*D.rho, z);
    if (g.norm() > 0.0) dirs.push_back(g.normalized());
    for (const CVector& u : table[z.dim()]) dirs.push_back(u);

    // Starts whose ray leaves far beyond the best candidate so far are skipped.
    std::vector<ProjectionCandidate> found;
    for (const CVector& u : dirs) {
        double t;
        try {
            const double cap = found.empty() ? std::numeric_limits<double>::infinity() : 4.0 * found.front().dist;
            t = first_hit(D, z, u, 0.0, star, cap);
        } catch (const Error&) {
            continue;
        }
        auto cand = kkt_project(D, z, z + t * u, found);
        if (!cand) continue;
        bool dup = false;
        for (auto& f : found)
            if (distance(f.point, cand->point) <= 1e-7 * (1.0 + D.diameter_scale)) {
                if (cand->dist < f.dist) f = *cand;
                dup = true;
                break;
            }
        if (!dup) found.push_back(*cand);
        std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.dist < b.dist; });
        // Far closer to the boundary than its curvature scale (proxied by the
        // inradius) the nearest point is unique and the gradient start finds it.
        if (&u == &dirs.front() && found.front().dist <= 0.05 * D.inradius) break;
    }
    if (found.empty()) fail(Errc::ProjectionDiverged, "no start converged to a boundary minimizer");
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.dist < b.dist; });
    return found;
}

inline BoundaryPoint make_boundary_point(const DomainSpec& D, const CPoint& p, const CPoint& source)
{
    const CVector g = real_gradient(*D.rho, p);
    return BoundaryPoint{p, (-1.0 * g).normalized(), source};
}

/// Nearest boundary point from precomputed candidates; fails when two
/// distinct candidates tie.
inline BoundaryPoint projection_from(const DomainSpec& D, const CPoint& z, const std::vector<ProjectionCandidate>& cands)
{
    const auto& best = cands.front();
    for (std::size_t i = 1; i < cands.size(); ++i)
        if (cands[i].dist - best.dist <= 1e-6 && distance(cands[i].point, best.point) > 1e-5) {
            std::ostringstream os;
            os.precision(12);
            os << "two nearest boundary points at distances " << best.dist << " and " << cands[i].dist << ": (";
            for (std::size_t k = 0; k < z.dim(); ++k) os << (k ? ", " : "") << best.point[k];
            os << ") and (";
            for (std::size_t k = 0; k < z.dim(); ++k) os << (k ? ", " : "") << cands[i].point[k];
            os << ")";
            fail(Errc::ProjectionAmbiguous, os.str());
        }
    return make_boundary_point(D, best.point, z);
}

} // namespace detail

/// Euclidean distance delta(z) from z to the boundary.
inline double boundary_distance(const DomainSpec& D, const CPoint& z)
{
    require_inside(D, z);
    if (D.is_ball_like()) return 1.0 - z.norm();
    return detail::nearest_boundary(D, z).front().dist;
}

/// Nearest boundary point and inner unit normal.
inline BoundaryPoint boundary_projection(const DomainSpec& D, const CPoint& z)
{
    require_inside(D, z);
    if (D.is_ball_like()) {
        const double r = z.norm();
        if (r == 0.0) fail(Errc::ProjectionAmbiguous, "every boundary point is nearest to the center");
        const CVector u = (1.0 / r) * as_vector(z);
        return BoundaryPoint{as_point(u), -u, z};
    }
    return detail::projection_from(D, z, detail::nearest_boundary(D, z));
}

namespace detail {

/// Generic search over the complex line z + C v: 64 rays in the lambda-plane,
/// then golden-section refinement around every coarse local minimum. Refining
/// only the best ray makes the result jump where two minima trade places.
inline double directional_search(const DomainSpec& D, const CPoint& z, const CVector& v)
{
    const CVector u = v.normalized();
    const bool star = D.is_convex();
    constexpr int kRays = 64;
    const double h = 2.0 * kPi / kRays;
    auto ray = [&](double theta, double guess) {
        return first_hit(D, z, std::polar(1.0, theta) * u, guess, star);
    };
    std::array<double, kRays> r{};
    double prev = 0.0;
    for (int i = 0; i < kRays; ++i) prev = r[i] = ray(i * h, prev);
    double best = *std::min_element(r.begin(), r.end());
    const double coarse_best = best;
    constexpr double kGolden = 0.6180339887498949;
    for (int i = 0; i < kRays; ++i) {
        const double left = r[(i + kRays - 1) % kRays], right = r[(i + 1) % kRays];
        if (r[i] > left || r[i] > right || r[i] > 1.1 * coarse_best) continue;
        double a = i * h - h, b = i * h + h;
        double c = b - kGolden * (b - a), d = a + kGolden * (b - a);
        double fc = ray(c, r[i]), fd = ray(d, r[i]);
        for (int it = 0; it < 28; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - kGolden * (b - a);
                fc = ray(c, fd);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + kGolden * (b - a);
                fd = ray(d, fc);
            }
        }
        best = std::min({best, fc, fd});
    }
    return best;
}

} // namespace detail

/// delta(z; v): distance from z to the boundary inside the complex line z + C v.
inline double directional_boundary_distance(const DomainSpec& D, const CPoint& z, const CVector& v)
{
    require_inside(D, z);
    require(v.dim() == z.dim(), "vector dimension does not match the domain");
    require(v.finite() && v.norm() > 0.0, "direction must be a nonzero finite vector");
    if (D.is_ball_like()) {
        // |z + lambda u|^2 = 1 is the circle |lambda + w| = R, w = <z, u>.
        const CVector u = v.normalized();
        const double w = std::abs(hdot(z, u));
        const double s = 1.0 - z.norm2();
        return s / (std::sqrt(s + w * w) + w);
    }
    return detail::directional_search(D, z, v);
}

/// L(p; v) = sum d2 rho/dz_nu dzbar_mu v_nu conj(v_mu).
inline double levi_form(const DomainSpec& D, const BoundaryPoint& p, const CVector& v)
{
    require(v.dim() == D.dim(), "vector dimension does not match the domain");
    CMatrix a, b;
    D.rho->hessians(p.point, a, b);
    cplx s = 0.0;
    for (std::size_t i = 0; i < v.dim(); ++i)
        for (std::size_t j = 0; j < v.dim(); ++j) s += b[i][j] * v[i] * std::conj(v[j]);
    return s.real();
}

/// Levi form of the unit-gradient rescaling rho / |grad rho| at p. This is
/// the normalization under which the strongly pseudoconvex estimates hold.
inline double normalized_levi_form(const DomainSpec& D, const BoundaryPoint& p, const CVector& v)
{
    return levi_form(D, p, v) / real_gradient(*D.rho, p.point).norm();
}

struct NormalTangential {
    CVector normal;
    CVector tangential;
};

/// v = v_N + v_H with v_N along the complex normal at pi(z) and v_H in the
/// complex tangent space.
inline NormalTangential normal_tangential_split(const DomainSpec& D, const BoundaryPoint& bp, const CVector& v)
{
    CVector nrm = D.rho->dz(bp.point);
    for (std::size_t k = 0; k < nrm.dim(); ++k) nrm[k] = std::conj(nrm[k]);
    nrm = nrm.normalized();
    const CVector vn = hdot(v, nrm) * nrm;
    return {vn, v - vn};
}

inline NormalTangential normal_tangential_split(const DomainSpec& D, const CPoint& z, const CVector& v)
{
    require(v.dim() == D.dim(), "vector dimension does not match the domain");
    const BoundaryPoint bp = boundary_projection(D, z);
    return normal_tangential_split(D, bp, v);
}

inline Hyperplane supporting_hyperplane(const DomainSpec& D, const BoundaryPoint& p)
{
    if (!D.is_convex()) fail(Errc::NotConvex, "supporting hyperplanes need a convex domain");
    CVector nu = D.rho->dz(p.point);
    for (std::size_t k = 0; k < nu.dim(); ++k) nu[k] = std::conj(nu[k]);
    return Hyperplane{p.point, nu.normalized()};
}

/// Checks rho >= 0 on `samples` points of the real tangent hyperplane near p.
inline void verify_supporting_hyperplane(const DomainSpec& D, const Hyperplane& H, std::size_t samples = 1000,
                                         std::uint64_t seed = 1)
{
    const double radius = 0.5 * D.diameter_scale;
    for (std::size_t i = 0; i < samples; ++i) {
        CounterRng rng(seed, stream_id("supporting-hyperplane"), i);
        CVector w = rng.unit_vector(D.dim());
        w -= rdot(w, H.normal) * H.normal;
        if (w.norm() < 1e-9) continue;
        const double s = radius * std::pow(rng.uniform_pos(), 2.0);
        const CPoint q = H.anchor + s * w.normalized();
        if (D.level(q) < -1e-12 * D.diameter_scale)
            fail(Errc::SeparationViolated, "supporting hyperplane meets the domain");
    }
}

inline Hyperplane verified_supporting_hyperplane(const DomainSpec& D, const BoundaryPoint& p)
{
    Hyperplane h = supporting_hyperplane(D, p);
    verify_supporting_hyperplane(D, h);
    return h;
}

/// Boundary point hit by the ray from the deep point in direction u.
inline BoundaryPoint boundary_point_towards(const DomainSpec& D, const CVector& u)
{
    const CVector w = u.normalized();
    const double t = detail::first_hit(D, D.deep_point, w, 0.0, D.is_convex());
    return detail::make_boundary_point(D, D.deep_point + t * w, D.deep_point);
}

struct AuditResult {
    double C_hat = 0.0;
    bool diverging = false;
    double slope = 0.0;             // log stratum max vs log delta
    CPoint worst_z;
    CVector worst_v;
    std::vector<double> stratum_delta; // geometric center of each decade
    std::vector<double> stratum_max;
};

/// Empirical m-convexity constant: max of delta(z;v) / delta(z)^(1/m) with
/// delta stratified log-uniformly over [1e-6, inradius]. Each sample probes a
/// uniform direction and its complex-tangential component.
inline AuditResult mconvexity_audit(const DomainSpec& D, double m, std::size_t samples, std::uint64_t seed)
{
    if (!D.is_convex()) fail(Errc::NotConvex, "m-convexity audit needs a convex domain");
    require(m > 0.0, "m must be positive");
    require(samples >= 1, "samples must be >= 1");
    const double lo = std::log(1e-6 * D.diameter_scale);
    const double hi = std::log(D.inradius);
    const int strata = std::max(1, static_cast<int>(std::ceil((hi - lo) / std::log(10.0))));

    struct Sample {
        double delta = 0.0, ratio = -1.0;
        CPoint z;
        CVector v;
    };
    std::vector<Sample> out(samples);
    parallel_for(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("mconvex-audit"), i);
        const BoundaryPoint bp = boundary_point_towards(D, rng.unit_vector(D.dim()));
        const int s = static_cast<int>(i % static_cast<std::size_t>(strata));
        const double a = lo + (hi - lo) * s / strata, b = lo + (hi - lo) * (s + 1) / strata;
        double depth = std::exp(rng.uniform(a, b));
        CPoint z = bp.point + depth * bp.inner_normal;
        while (!D.contains(z) && depth > 1e-12) {
            depth *= 0.5;
            z = bp.point + depth * bp.inner_normal;
        }
        if (!D.contains(z)) return;
        const double delta = boundary_distance(D, z);
        const double scale = std::pow(delta, 1.0 / m);
        // A uniform direction and its complex-tangential part at the base
        // boundary point; the supremum sits near tangential directions.
        const CVector v = rng.unit_vector(D.dim());
        out[i] = {delta, directional_boundary_distance(D, z, v) / scale, z, v};
        const CVector vh = v - hdot(v, bp.inner_normal) * bp.inner_normal;
        if (vh.norm() > 1e-9) {
            const double r = directional_boundary_distance(D, z, vh) / scale;
            if (r > out[i].ratio) out[i] = {delta, r, z, vh};
        }
    });

    AuditResult res;
    res.stratum_delta.assign(strata, 0.0);
    res.stratum_max.assign(strata, -1.0);
    for (int s = 0; s < strata; ++s) res.stratum_delta[s] = std::exp(lo + (hi - lo) * (s + 0.5) / strata);
    for (const Sample& s : out) {
        if (s.ratio < 0.0) continue;
        if (s.ratio > res.C_hat) {
            res.C_hat = s.ratio;
            res.worst_z = s.z;
            res.worst_v = s.v;
        }
        int k = static_cast<int>(std::floor((std::log(s.delta) - lo) / (hi - lo) * strata));
        k = std::clamp(k, 0, strata - 1);
        res.stratum_max[k] = std::max(res.stratum_max[k], s.ratio);
    }
    // Least-squares slope of log(max ratio) against log(delta) over filled strata.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int s = 0; s < strata; ++s) {
        if (res.stratum_max[s] <= 0.0) continue;
        const double x = std::log(res.stratum_delta[s]), y = std::log(res.stratum_max[s]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    if (cnt >= 2) res.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    res.diverging = cnt >= 2 && res.slope < -0.1;
    return res;
}

struct LeviAudit {
    double min_eigenvalue = std::numeric_limits<double>::infinity();
    CPoint worst;
    bool positive = false;
};

/// Smallest eigenvalue of the normalized Levi form on the complex tangent
/// space over boundary samples.
inline LeviAudit levi_positivity_audit(const DomainSpec& D, std::size_t samples, std::uint64_t seed)
{
    require(D.dim() >= 2, "Levi form on the complex tangent space needs n >= 2");
    std::vector<double> eig(samples);
    std::vector<CPoint> pts(samples);
    parallel_for(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream_id("levi-audit"), i);
        const BoundaryPoint bp = boundary_point_towards(D, rng.unit_vector(D.dim()));
        const std::size_t n = D.dim();
        CVector nrm = bp.inner_normal;
        // Orthonormal basis of the complex tangent space by Gram-Schmidt.
        std::vector<CVector> basis;
        for (std::size_t k = 0; k < n && basis.size() + 1 < n; ++k) {
            CVector e = CVector::basis(n, k);
            e -= hdot(e, nrm) * nrm;
            for (const auto& b : basis) e -= hdot(e, b) * b;
            if (e.norm() > 1e-6) basis.push_back(e.normalized());
        }
        Eigen::MatrixXcd h(basis.size(), basis.size());
        CMatrix a, b;
        D.rho->hessians(bp.point, a, b);
        const double gn = real_gradient(*D.rho, bp.point).norm();
        for (std::size_t r = 0; r < basis.size(); ++r)
            for (std::size_t c = 0; c < basis.size(); ++c) {
                cplx s = 0.0;
                for (std::size_t p = 0; p < n; ++p)
                    for (std::size_t q = 0; q < n; ++q) s += b[p][q] * basis[c][p] * std::conj(basis[r][q]);
                h(r, c) = s / gn;
            }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
        eig[i] = es.eigenvalues().minCoeff();
        pts[i] = bp.point;
    });
    LeviAudit res;
    for (std::size_t i = 0; i < samples; ++i)
        if (eig[i] < res.min_eigenvalue) {
            res.min_eigenvalue = eig[i];
            res.worst = pts[i];
        }
    res.positive = res.min_eigenvalue > 0.0;
    return res;
}

namespace detail {

/// Ray hits from the deep point in quasi-random directions.
inline std::vector<BoundaryPoint> boundary_samples(const DomainSpec& D, std::size_t count, std::string_view tag)
{
    std::vector<BoundaryPoint> pts;
    pts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        CounterRng rng(0x6b6f62u, stream_id(tag), i);
        pts.push_back(boundary_point_towards(D, rng.unit_vector(D.dim())));
    }
    return pts;
}

} // namespace detail

/// Computes the deep point, inradius, diameter and hyperplane pool.
inline void finalize(DomainSpec& D)
{
    require(D.rho != nullptr, "domain needs a defining function");
    require(D.reference.dim() == D.dim(), "reference point dimension mismatch");
    if (!(D.level(D.reference) < 0.0)) fail(Errc::InvalidInput, "reference point is not inside the domain");
    if (const SPSCClass* s = D.spsc()) s->bb.validate();
    if (const ConvexClass* c = D.convex()) require(c->m >= 1.0, "m-convexity order must be >= 1");

    D.deep_point = D.reference;
    if (D.is_ball_like() || D.kind == DomainKind::ComplexEllipsoid) {
        D.deep_point = CPoint::origin(D.dim());
        D.inradius = 1.0;
    } else {
        // Compass search for the point of maximal boundary distance.
        D.diameter_scale = 2.0 * D.bounding_radius;
        double best = boundary_distance(D, D.deep_point);
        double step = 0.25 * best;
        while (step > 1e-5) {
            bool moved = false;
            for (std::size_t k = 0; k < 2 * D.dim(); ++k)
                for (double sgn : {1.0, -1.0}) {
                    CPoint trial = D.deep_point;
                    trial.set_real_coord(k, trial.real_coord(k) + sgn * step);
                    if (!D.contains(trial)) continue;
                    const double d = boundary_distance(D, trial);
                    if (d > best) {
                        best = d;
                        D.deep_point = trial;
                        moved = true;
                    }
                }
            if (!moved) step *= 0.5;
        }
        D.inradius = best;
    }

    if (D.is_ball_like()) {
        D.diameter_scale = 2.0;
    } else {
        const auto pts = detail::boundary_samples(D, 256, "diameter");
        double diam = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j) diam = std::max(diam, distance(pts[i].point, pts[j].point));
        D.diameter_scale = diam;
    }
    if (const SPSCClass* s = D.spsc())
        require(s->bb.epsilon0 < D.inradius, "BBConfig.epsilon0 must be smaller than the inradius");

    D.boundary_pool.clear();
    if (D.is_convex()) {
        // Farthest-point selection of 8 boundary samples.
        const auto pts = detail::boundary_samples(D, 64, "hyperplane-pool");
        std::vector<double> dmin(pts.size(), std::numeric_limits<double>::infinity());
        std::size_t cur = 0;
        for (int k = 0; k < 8; ++k) {
            D.boundary_pool.push_back(pts[cur]);
            std::size_t next = 0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                dmin[i] = std::min(dmin[i], distance(pts[i].point, pts[cur].point));
                if (dmin[i] > dmin[next]) next = i;
            }
            cur = next;
        }
    }
}

// Presets.

inline DomainSpec make_unit_disk()
{
    DomainSpec d;
    d.kind = DomainKind::UnitDisk;
    d.id = "disk";
    d.rho = std::make_shared<PerturbedSphere>(1);
    d.classification = ConvexClass{1.0, 1.0};
    d.bounding_radius = 2.0;
    d.reference = CPoint::origin(1);
    d.nikolov_A = 2.0;
    finalize(d);
    return d;
}

inline DomainSpec make_unit_ball(std::size_t n)
{
    require(n >= 2 && n <= kMaxDim, "ball dimension must be in [2, 4]");
    DomainSpec d;
    d.kind = DomainKind::UnitBall;
    d.id = "ball" + std::to_string(n);
    d.rho = std::make_shared<PerturbedSphere>(n);
    d.classification = ConvexClass{2.0, std::sqrt(2.0)};
    d.bounding_radius = 2.0;
    d.reference = CPoint::origin(n);
    d.nikolov_A = 2.0;
    finalize(d);
    return d;
}

/// |z1|^2 + |z2|^(2m) < 1. Its m-convexity order is 2m: along z2 at
/// (1 - delta, 0) the complex line reaches the boundary at distance ~ delta^(1/(2m)).
inline DomainSpec make_ellipsoid(int m)
{
    DomainSpec d;
    d.kind = DomainKind::ComplexEllipsoid;
    d.id = "ellipsoid" + std::to_string(m);
    d.exponent = m;
    d.rho = std::make_shared<EllipsoidFunction>(m);
    d.classification = ConvexClass{2.0 * m, std::nullopt};
    d.bounding_radius = 2.0;
    d.reference = CPoint::origin(2);
    d.nikolov_A = 2.0;
    finalize(d);
    return d;
}

/// Strongly pseudoconvex perturbation of the ball: |z|^2 - 1 + 0.1 Re(z1^3).
/// The perturbation is pluriharmonic, so the Levi form is the identity.
inline DomainSpec make_spsc_preset()
{
    DomainSpec d;
    d.kind = DomainKind::GeneralDefining;
    d.id = "spsc";
    d.rho = std::make_shared<PerturbedSphere>(2, 0.1, 3);
    d.classification = SPSCClass{};
    d.bounding_radius = 2.0;
    d.reference = CPoint::origin(2);
    d.nikolov_A = 2.0;
    finalize(d);
    return d;
}

/// Nonconvex strongly pseudoconvex domain |z|^2 - 1 + 0.24 Re(z1^4): four
/// petals with concave sides (the side through (0.913, 0) is dented).
inline DomainSpec make_dent_preset()
{
    DomainSpec d;
    d.kind = DomainKind::GeneralDefining;
    d.id = "dent";
    d.rho = std::make_shared<PerturbedSphere>(2, 0.24, 4);
    d.classification = SPSCClass{};
    d.bounding_radius = 1.45;
    d.reference = CPoint::origin(2);
    d.nikolov_A = 2.0;
    finalize(d);
    return d;
}

inline DomainSpec make_general(const std::string& rho, std::size_t n, Classification cls, double bounding_radius,
                               std::optional<CPoint> reference = std::nullopt, std::string id = "general")
{
    require(bounding_radius > 0.0 && std::isfinite(bounding_radius), "bounding radius must be positive");
    DomainSpec d;
    d.kind = DomainKind::GeneralDefining;
    d.id = std::move(id);
    d.rho = std::make_shared<ExpressionFunction>(rho, n);
    d.classification = std::move(cls);
    d.bounding_radius = bounding_radius;
    d.reference = reference ? *reference : CPoint::origin(n);
    finalize(d);
    return d;
}

} // namespace kob
