#pragma once

// Infinitesimal Kobayashi metric: exact formulas on the disk and ball,
// certified brackets elsewhere, and curve lengths built from them.

#include <mutex>
#include <vector>

#include "kob/domain.hpp"
#include "kob/interval.hpp"
#include "kob/rng.hpp"

namespace kob {

struct MetricOptions {
    bool use_exact = true; // exact formula on disk/ball; false treats them by their classification
    int quadrature_order = 8;
    double drift_tol = 1e-4;
    int max_bisections = 40;
};

// Ball automorphisms phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>),
// s_a = sqrt(1 - |a|^2), P_a the projection onto C a and Q_a = I - P_a.

inline CPoint ball_automorphism(const CPoint& a, const CPoint& z)
{
    const double r2 = a.norm2();
    require(r2 < 1.0, "automorphism center must lie in the ball");
    const CVector av = as_vector(a), zv = as_vector(z);
    const CVector p = r2 > 0.0 ? (hdot(zv, av) / r2) * av : CVector(z.dim());
    const CVector q = zv - p;
    const CVector num = av - p - std::sqrt(1.0 - r2) * q;
    return as_point((1.0 / (1.0 - hdot(zv, av))) * num);
}

/// Differential of phi_a at z = a; phi_a(a) = 0.
inline CVector ball_automorphism_differential(const CPoint& a, const CVector& v)
{
    const double r2 = a.norm2();
    require(r2 < 1.0, "automorphism center must lie in the ball");
    const CVector av = as_vector(a);
    const CVector p = r2 > 0.0 ? (hdot(v, av) / r2) * av : CVector(v.dim());
    const CVector q = v - p;
    return (-1.0 / (1.0 - r2)) * (p + std::sqrt(1.0 - r2) * q);
}

inline bool has_exact_metric(const DomainSpec& D) { return D.is_ball_like(); }

/// k(z; v) on the disk and ball: move z to the origin, where k(0; w) = |w|.
inline double kobayashi_exact(const DomainSpec& D, const CPoint& z, const CVector& v)
{
    if (!has_exact_metric(D))
        fail(Errc::UnsupportedDomain, "exact Kobayashi metric is only available on the disk and ball");
    require_inside(D, z);
    require(v.dim() == z.dim(), "vector dimension does not match the domain");
    if (D.kind == DomainKind::UnitDisk) return std::abs(v[0]) / (1.0 - std::norm(z[0]));
    return ball_automorphism_differential(z, v).norm();
}

/// Kobayashi distance on the disk and ball, artanh |phi_x(y)|, evaluated as
/// log(1 + s) - log(c)/2 with c = 1 - s^2 computed without cancellation.
inline double kobayashi_distance_exact(const DomainSpec& D, const CPoint& x, const CPoint& y)
{
    if (!has_exact_metric(D))
        fail(Errc::UnsupportedDomain, "exact Kobayashi distance is only available on the disk and ball");
    require_inside(D, x);
    require_inside(D, y);
    const cplx xy = hdot(x, y);
    double lagrange = 0.0; // |x|^2 |y|^2 - |<x,y>|^2
    for (std::size_t i = 0; i < x.dim(); ++i)
        for (std::size_t j = i + 1; j < x.dim(); ++j)
            lagrange += std::norm(x[i] * y[j] - x[j] * y[i]);
    const double den = std::norm(1.0 - xy);
    const double num = std::max(0.0, distance(x, y) * distance(x, y) - lagrange);
    const double s = std::sqrt(num / den);
    const double rx = x.norm(), ry = y.norm();
    const double c = (1.0 - rx) * (1.0 + rx) * (1.0 - ry) * (1.0 + ry) / den;
    return std::log1p(s) - 0.5 * std::log(c);
}

struct MetricBracket {
    Interval value;
    bool negative_clipped = false; // NegativeBracket: lower endpoint clipped to 0
    bool in_collar = false;        // strongly pseudoconvex: Levi bracket used
};

/// Two-sided bracket on k(z; v) from the domain's classification.
inline MetricBracket kobayashi_bracket(const DomainSpec& D, const CPoint& z, const CVector& v)
{
    require_inside(D, z);
    require(v.dim() == z.dim(), "vector dimension does not match the domain");
    require(v.finite() && v.norm() > 0.0, "direction must be a nonzero finite vector");
    const double nv = v.norm();
    MetricBracket out;
    if (D.is_convex()) {
        const double dd = directional_boundary_distance(D, z, v);
        out.value = Interval(nv / (2.0 * dd), nv / dd);
        return out;
    }
    const BBConfig& bb = D.spsc()->bb;
    // One candidate search serves both the distance and, in the collar, the projection.
    const bool ball = D.is_ball_like();
    const auto cands = ball ? std::vector<detail::ProjectionCandidate>{} : detail::nearest_boundary(D, z);
    const double delta = ball ? boundary_distance(D, z) : cands.front().dist;
    if (delta < bb.epsilon0) {
        out.in_collar = true;
        const BoundaryPoint bp = ball ? boundary_projection(D, z) : detail::projection_from(D, z, cands);
        const auto split = normal_tangential_split(D, bp, v);
        const double levi = normalized_levi_form(D, bp, split.tangential);
        const double normal = split.normal.norm2() / (4.0 * delta * delta);
        const double core_lo = normal + (1.0 - bb.epsilon) * levi / delta;
        const double core_hi = normal + (1.0 + bb.epsilon) * levi / delta;
        const double f_lo = 1.0 - bb.C_bb * std::sqrt(delta);
        const double f_hi = 1.0 + bb.C_bb * std::sqrt(delta);
        double lo = f_lo * std::sqrt(std::max(core_lo, 0.0));
        if (f_lo < 0.0 || core_lo < 0.0) {
            lo = 0.0;
            out.negative_clipped = true;
        }
        const double hi = f_hi * std::sqrt(std::max(core_hi, 0.0));
        out.value = Interval(std::min(lo, hi), hi);
        return out;
    }
    // Outside the collar: C1 |v| / delta^(1/2) below, inscribed-ball Schwarz bound above.
    const double hi = nv / delta;
    double lo = bb.C1 * nv / std::sqrt(std::max(delta, bb.epsilon0));
    if (lo > hi) {
        lo = hi;
        out.negative_clipped = true;
    }
    out.value = Interval(lo, hi);
    return out;
}

inline Interval kobayashi_interval(const DomainSpec& D, const CPoint& z, const CVector& v)
{
    return kobayashi_bracket(D, z, v).value;
}

/// Metric value used for lengths: exact when allowed, the bracket otherwise.
inline Interval metric_value(const DomainSpec& D, const CPoint& z, const CVector& v, const MetricOptions& opts)
{
    if (opts.use_exact && has_exact_metric(D)) return Interval::point(kobayashi_exact(D, z, v));
    return kobayashi_interval(D, z, v);
}

// Polylines.

struct Polyline {
    std::vector<CPoint> vertices;

    std::size_t size() const { return vertices.size(); }
    const CPoint& front() const { return vertices.front(); }
    const CPoint& back() const { return vertices.back(); }

    Polyline reversed() const { return Polyline{{vertices.rbegin(), vertices.rend()}}; }
};

/// Checks the polyline invariants: >= 2 distinct consecutive vertices, every
/// vertex and segment midpoint inside the domain.
inline void validate(const DomainSpec& D, const Polyline& p)
{
    require(p.size() >= 2, "polyline needs at least two vertices");
    for (std::size_t i = 0; i < p.size(); ++i) {
        require(p.vertices[i].dim() == D.dim(), "polyline dimension does not match the domain");
        if (!D.contains(p.vertices[i])) fail(Errc::PointOutsideDomain, "polyline vertex outside the domain");
        if (i > 0) {
            require(!(p.vertices[i] == p.vertices[i - 1]), "consecutive polyline vertices coincide");
            if (!D.contains(midpoint(p.vertices[i - 1], p.vertices[i])))
                fail(Errc::SegmentExitsDomain, "polyline segment leaves the domain");
        }
    }
}

/// Builds a polyline, dropping repeated consecutive vertices, and validates it.
inline Polyline make_polyline(const DomainSpec& D, const std::vector<CPoint>& vertices)
{
    Polyline p;
    for (const CPoint& v : vertices)
        if (p.vertices.empty() || !(p.vertices.back() == v)) p.vertices.push_back(v);
    validate(D, p);
    return p;
}

inline double euclidean_length(const Polyline& p)
{
    double s = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) s += distance(p.vertices[i - 1], p.vertices[i]);
    return s;
}

/// Euclidean length of the part of p from vertex i to vertex j (i <= j).
inline double euclidean_length(const Polyline& p, std::size_t i, std::size_t j)
{
    double s = 0.0;
    for (std::size_t k = i + 1; k <= j; ++k) s += distance(p.vertices[k - 1], p.vertices[k]);
    return s;
}

// Gauss-Legendre quadrature on [0, 1].

struct GaussRule {
    std::vector<double> nodes, weights;
};

inline GaussRule gauss_legendre_unit(int order)
{
    require(order >= 1 && order <= 256, "quadrature order must be in [1, 256]");
    GaussRule r;
    r.nodes.resize(order);
    r.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        // Newton on P_n from the Chebyshev-like initial guess.
        double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) p0 = 1.0;
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) p0 = 1.0;
            dp = order * (x * p1 - p0) / (x * x - 1.0);
        }
        r.nodes[i] = 0.5 * (1.0 - x);
        r.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

inline const GaussRule& gauss_rule(int order)
{
    static std::mutex mu;
    static std::vector<std::unique_ptr<GaussRule>> cache(257);
    std::lock_guard lock(mu);
    require(order >= 1 && order <= 256, "quadrature order must be in [1, 256]");
    if (!cache[order]) cache[order] = std::make_unique<GaussRule>(gauss_legendre_unit(order));
    return *cache[order];
}

/// Fixed-order quadrature of the metric along the segment [a, b].
inline Interval segment_length_fixed(const DomainSpec& D, const CPoint& a, const CPoint& b, const MetricOptions& opts,
                                     int order)
{
    const CVector v = b - a;
    if (v.norm() == 0.0) return Interval::point(0.0);
    const GaussRule& g = gauss_rule(order);
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const CPoint z = a + g.nodes[i] * v;
        if (!D.contains(z)) fail(Errc::SegmentExitsDomain, "quadrature node outside the domain");
        const Interval k = metric_value(D, z, v, opts);
        lo += g.weights[i] * k.lo;
        hi += g.weights[i] * k.hi;
    }
    return Interval(std::min(lo, hi), hi);
}

namespace detail {

inline Interval segment_length_adaptive(const DomainSpec& D, const CPoint& a, const CPoint& b,
                                        const MetricOptions& opts, int depth)
{
    const Interval coarse = segment_length_fixed(D, a, b, opts, opts.quadrature_order);
    const Interval fine = segment_length_fixed(D, a, b, opts, 2 * opts.quadrature_order);
    if (std::abs(fine.hi - coarse.hi) <= opts.drift_tol * std::abs(fine.hi) || depth >= opts.max_bisections)
        return fine;
    const CPoint m = midpoint(a, b);
    return segment_length_adaptive(D, a, m, opts, depth + 1) + segment_length_adaptive(D, m, b, opts, depth + 1);
}

} // namespace detail

/// Kobayashi length bracket of one segment with adaptive bisection on drift.
inline Interval segment_length(const DomainSpec& D, const CPoint& a, const CPoint& b, const MetricOptions& opts = {})
{
    return detail::segment_length_adaptive(D, a, b, opts, 0);
}

/// Kobayashi length bracket of a polyline.
inline Interval kobayashi_length_interval(const DomainSpec& D, const Polyline& p, const MetricOptions& opts = {})
{
    validate(D, p);
    Interval total = Interval::point(0.0);
    for (std::size_t i = 1; i < p.size(); ++i) total += segment_length(D, p.vertices[i - 1], p.vertices[i], opts);
    return total;
}

inline Interval kobayashi_length_interval(const DomainSpec& D, const Polyline& p, int quadrature_order)
{
    MetricOptions opts;
    opts.quadrature_order = quadrature_order;
    return kobayashi_length_interval(D, p, opts);
}

/// Cumulative hi-lengths at the vertices (0 at the first vertex).
inline std::vector<double> cumulative_hi_length(const DomainSpec& D, const Polyline& p, const MetricOptions& opts = {})
{
    std::vector<double> s(p.size(), 0.0);
    for (std::size_t i = 1; i < p.size(); ++i)
        s[i] = s[i - 1] + segment_length(D, p.vertices[i - 1], p.vertices[i], opts).hi;
    return s;
}

// Distance bounds that need no path.

/// log(1 + A |x - y| / sqrt(delta(x) delta(y))).
inline double nikolov_upper(double A, double dx, double dy, double euclid)
{
    return std::log1p(A * euclid / std::sqrt(dx * dy));
}

/// (1/2) |log d(x,H) / d(y,H)| for a complex hyperplane H missing the domain.
inline double hyperplane_lower(const Hyperplane& H, const CPoint& x, const CPoint& y)
{
    return 0.5 * std::abs(std::log(H.complex_distance(x) / H.complex_distance(y)));
}

/// (1/2) |log delta(x)/delta(y)| - C.
inline double log_ratio_lower(double dx, double dy, double C) { return 0.5 * std::abs(std::log(dx / dy)) - C; }

enum class SampleLaw { Uniform, NearBoundary };

/// Interior sample: uniform by rejection from the bounding box, or at a
/// log-uniform depth in [min_depth, inradius] below a random boundary point.
inline CPoint sample_interior_point(const DomainSpec& D, CounterRng& rng, SampleLaw law = SampleLaw::Uniform,
                                    double min_depth = 1e-6)
{
    if (law == SampleLaw::NearBoundary) {
        for (;;) {
            const BoundaryPoint bp = boundary_point_towards(D, rng.unit_vector(D.dim()));
            const double lo = std::log(min_depth), hi = std::log(D.inradius);
            const double depth = std::exp(lo + (hi - lo) * rng.uniform());
            const CPoint z = bp.point + depth * bp.inner_normal;
            if (D.contains(z)) return z;
        }
    }
    if (D.is_ball_like()) {
        for (;;) {
            const CPoint z = rng.in_unit_ball(D.dim());
            if (D.contains(z)) return z;
        }
    }
    for (;;) {
        CPoint z(D.dim());
        for (std::size_t k = 0; k < 2 * D.dim(); ++k)
            z.set_real_coord(k, D.bounding_radius * (2.0 * rng.uniform() - 1.0));
        if (D.contains(z)) return z;
    }
}

} // namespace kob
