#pragma once

// Two-sided Kobayashi distance bounds.

#include <optional>

#include "kob/path.hpp"

namespace kob {

enum class UpperPath { None, Straight, Optimized };

enum class LowerWitness { None, Hyperplane, LogRatio, Exact };

inline std::string_view lower_witness_name(LowerWitness w)
{
    switch (w) {
    case LowerWitness::None: return "none";
    case LowerWitness::Hyperplane: return "hyperplane";
    case LowerWitness::LogRatio: return "log-ratio";
    case LowerWitness::Exact: return "exact";
    }
    return "?";
}

struct DistanceOptions {
    UpperPath upper = UpperPath::Optimized;
    bool symmetrize = true;
    std::optional<double> nikolov_A;   // defaults to the domain's calibrated value
    std::size_t hyperplane_pool = 8;
    std::optional<Polyline> seed;      // x -> y seed for the optimizer (e.g. a concatenated witness)
    SeedOptions seeding{};
    OptimizeOptions optimize{};
};

struct DistanceBound {
    Interval value;
    std::optional<Polyline> upper_witness; // absent when the Nikolov formula wins
    LowerWitness lower_witness = LowerWitness::None;
    std::optional<Hyperplane> hyperplane;  // set for LowerWitness::Hyperplane
};

namespace detail {

inline double best_hyperplane_lower(const DomainSpec& D, const CPoint& x, const CPoint& y, std::size_t pool,
                                    std::optional<Hyperplane>& best_h)
{
    double best = 0.0;
    auto consider = [&](const BoundaryPoint& bp) {
        const Hyperplane H = supporting_hyperplane(D, bp);
        const double v = hyperplane_lower(H, x, y);
        if (v > best) {
            best = v;
            best_h = H;
        }
    };
    for (const CPoint* p : {&x, &y}) {
        try {
            consider(boundary_projection(D, *p));
        } catch (const Error& e) {
            if (e.code() != Errc::ProjectionAmbiguous) throw;
        }
    }
    for (std::size_t i = 0; i < std::min(pool, D.boundary_pool.size()); ++i) consider(D.boundary_pool[i]);
    return best;
}

/// Optimized x -> y path and its length bracket.
inline OptimizeResult upper_path(const DomainSpec& D, const CPoint& x, const CPoint& y, const DistanceOptions& o,
                                 const std::optional<Polyline>& seed)
{
    if (o.upper == UpperPath::Straight) {
        const Polyline p = make_polyline(D, {x, y});
        return OptimizeResult{p, kobayashi_length_interval(D, p, o.optimize.metric), false, 0};
    }
    const Polyline s = seed ? *seed : seed_path(D, x, y, o.seeding);
    return optimize_path(D, s, o.optimize);
}

} // namespace detail

/// Distance bracket: hi from the Nikolov formula and the (symmetrized)
/// optimized path, lo from hyperplanes, the log-ratio bound or the exact oracle.
inline DistanceBound distance_bound(const DomainSpec& D, const CPoint& x, const CPoint& y,
                                    const DistanceOptions& o = {})
{
    require_inside(D, x);
    require_inside(D, y);
    DistanceBound out;
    if (x == y) {
        out.value = Interval::point(0.0);
        return out;
    }
    const double dx = boundary_distance(D, x), dy = boundary_distance(D, y);
    const double A = o.nikolov_A.value_or(D.nikolov_A);
    double hi = nikolov_upper(A, dx, dy, distance(x, y));

    if (o.upper != UpperPath::None) {
        OptimizeResult best = detail::upper_path(D, x, y, o, o.seed);
        if (o.symmetrize && o.upper == UpperPath::Optimized) {
            const std::optional<Polyline> rseed = o.seed ? std::optional<Polyline>(o.seed->reversed()) : std::nullopt;
            OptimizeResult back = detail::upper_path(D, y, x, o, rseed);
            if (back.length.hi < best.length.hi) {
                best.path = back.path.reversed();
                best.length = back.length;
            }
        }
        if (best.length.hi <= hi) {
            hi = best.length.hi;
            out.upper_witness = best.path;
        }
    }

    double lo = 0.0;
    if (D.is_convex()) {
        std::optional<Hyperplane> H;
        const double h = detail::best_hyperplane_lower(D, x, y, o.hyperplane_pool, H);
        if (h > lo) {
            lo = h;
            out.lower_witness = LowerWitness::Hyperplane;
            out.hyperplane = H;
        }
    } else {
        const double r = log_ratio_lower(dx, dy, D.spsc()->bb.C_lower);
        if (r > lo) {
            lo = r;
            out.lower_witness = LowerWitness::LogRatio;
        }
    }
    if (o.optimize.metric.use_exact && has_exact_metric(D)) {
        const double e = kobayashi_distance_exact(D, x, y);
        if (e >= lo) {
            lo = e;
            out.lower_witness = LowerWitness::Exact;
        }
    }
    // A path length cannot be below the distance; an exact lower value above a
    // path length within the quadrature drift tolerance is quadrature error.
    if (out.lower_witness == LowerWitness::Exact && out.upper_witness && lo > hi &&
        lo <= hi * (1.0 + o.optimize.metric.drift_tol) + 1e-9)
        hi = lo;
    if (lo > hi + 1e-9)
        fail(Errc::InconsistentBounds, "distance lower bound " + std::to_string(lo) + " exceeds upper bound " +
                                           std::to_string(hi) + "; check the configured constants");
    out.value = Interval(lo, std::max(lo, hi));
    return out;
}

/// Largest (e^K - 1) sqrt(delta(x) delta(y)) / |x - y| over sampled pairs.
struct NikolovEstimate {
    double A_hat = 0.0;
    CPoint x, y;
};

inline NikolovEstimate nikolov_constant_estimate(const DomainSpec& D, std::size_t samples, std::uint64_t seed,
                                                 const DistanceOptions& opts = {})
{
    require(samples >= 1, "nikolov_constant_estimate needs at least one sample");
    std::vector<double> ratio(samples, 0.0);
    std::vector<std::pair<CPoint, CPoint>> pairs(samples);
    const std::uint32_t stream = stream_id("nikolov");
    parallel_for(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream, i);
        CPoint x, y;
        do {
            x = sample_interior_point(D, rng);
            y = sample_interior_point(D, rng);
        } while (x == y);
        double K;
        if (has_exact_metric(D)) {
            K = kobayashi_distance_exact(D, x, y);
        } else {
            DistanceOptions o = opts;
            o.nikolov_A = std::numeric_limits<double>::infinity();
            K = distance_bound(D, x, y, o).value.hi;
        }
        ratio[i] = std::expm1(K) * std::sqrt(boundary_distance(D, x) * boundary_distance(D, y)) / distance(x, y);
        pairs[i] = {x, y};
    });
    const std::size_t k = static_cast<std::size_t>(std::max_element(ratio.begin(), ratio.end()) - ratio.begin());
    return NikolovEstimate{ratio[k], pairs[k].first, pairs[k].second};
}

} // namespace kob
