#pragma once

// Quasi-geodesic certificates and the geodesic-shape records: dyadic
// decomposition, Gehring-Hayman envelope, separation, Hausdorff distance.

#include "kob/distance.hpp"

namespace kob {

struct GeodesicCertificate {
    double lambda = 1.0;
    double kappa = 0.0;
    std::size_t sample_count = 0;
    std::pair<double, double> worst_pair{0.0, 0.0}; // (s, t) of the binding constraint
};

struct CertifyOptions {
    double lambda_max = 4.0;
    double kappa_max = 2.0;
    double grid_step = 0.1;
    DistanceOptions distance{}; // lower bounds only; the upper end is the arc parameter
};

/// Smallest (lambda, kappa) on the 0.1 grid, lexicographically, such that
/// |t-s|/lambda - kappa <= d.lo and d.hi <= lambda |t-s| + kappa for the
/// sampled parameter pairs, where s, t are cumulative hi-lengths at vertices.
inline GeodesicCertificate certify_quasigeodesic(const DomainSpec& D, const Polyline& p, std::size_t pairs,
                                                 std::uint64_t seed, const CertifyOptions& o = {})
{
    validate(D, p);
    require(pairs >= 1, "certify_quasigeodesic needs at least one pair");
    const std::vector<double> s = cumulative_hi_length(D, p, o.distance.optimize.metric);
    const std::size_t n = p.size();
    DistanceOptions dopt = o.distance;
    dopt.upper = UpperPath::None;

    struct Sample {
        double s, t;
        Interval d;
    };
    std::vector<Sample> samples(pairs);
    const std::uint32_t stream = stream_id("certify");
    parallel_for(pairs, [&](std::size_t k) {
        CounterRng rng(seed, stream, k);
        std::size_t i = rng.below(n), j = rng.below(n - 1);
        if (j >= i) ++j;
        if (i > j) std::swap(i, j);
        const double len = s[j] - s[i];
        Interval d = distance_bound(D, p.vertices[i], p.vertices[j], dopt).value;
        d = Interval(std::min(d.lo, len), std::min(d.hi, len)); // the sub-arc is itself a competitor
        samples[k] = Sample{s[i], s[j], d};
    });

    const double slack = 1e-9;
    const int nl = static_cast<int>(std::lround((o.lambda_max - 1.0) / o.grid_step));
    const int nk = static_cast<int>(std::lround(o.kappa_max / o.grid_step));
    double worst_violation = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= nl; ++a) {
        const double lambda = 1.0 + a * o.grid_step;
        double need = 0.0;
        std::size_t bind = 0;
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const double len = samples[k].t - samples[k].s;
            const double v = std::max(len / lambda - samples[k].d.lo, samples[k].d.hi - lambda * len);
            if (v > need) {
                need = v;
                bind = k;
            }
        }
        const int kk = static_cast<int>(std::ceil(std::max(0.0, need - slack) / o.grid_step - 1e-12));
        if (kk <= nk) {
            GeodesicCertificate c;
            c.lambda = lambda;
            c.kappa = kk * o.grid_step;
            c.sample_count = samples.size();
            c.worst_pair = {samples[bind].s, samples[bind].t};
            return c;
        }
        worst_violation = std::min(worst_violation, need - o.kappa_max);
    }
    fail(Errc::NotCertifiable, "no (lambda, kappa) on the grid certifies the path; smallest excess " +
                                   std::to_string(worst_violation));
}

// Dyadic decomposition by the levels D_max / 2^k of the boundary distance.

struct DyadicPiece {
    int nu = 0;
    std::vector<CPoint> points;        // first and last are the piece endpoints
    double delta_start = 0.0;          // endpoint delta values (crossing levels at interpolated ends)
    double delta_end = 0.0;
    double max_vertex_delta = 0.0;     // over the original vertices strictly inside
    bool degenerate = false;
};

struct DyadicDecomposition {
    double D_max = 0.0;
    int N1 = 0, N2 = 0;
    std::vector<DyadicPiece> pieces;   // ordered from y1 to y2, nu = -(N1+1) .. N2+1
    bool invariants_hold = true;

    std::size_t nondegenerate() const
    {
        std::size_t c = 0;
        for (const auto& p : pieces) c += p.degenerate ? 0 : 1;
        return c;
    }
};

namespace detail {

inline constexpr double kLevelSlack = 1e-12;

/// Position (segment index + fraction) where delta first reaches `level`
/// walking from vertex 0.
inline double first_crossing(const std::vector<double>& delta, double level)
{
    const double L = level * (1.0 - kLevelSlack);
    if (delta[0] >= L) return 0.0;
    for (std::size_t j = 1; j < delta.size(); ++j)
        if (delta[j] >= L) {
            const double t = std::clamp((level - delta[j - 1]) / (delta[j] - delta[j - 1]), 0.0, 1.0);
            return static_cast<double>(j - 1) + t;
        }
    return static_cast<double>(delta.size() - 1);
}

inline CPoint point_at(const Polyline& p, double u)
{
    const std::size_t j = std::min(static_cast<std::size_t>(u), p.size() - 2);
    return lerp(p.vertices[j], p.vertices[j + 1], u - static_cast<double>(j));
}

inline int dyadic_count(double D_max, double d) { return static_cast<int>(std::floor(std::log2(D_max / d) + 1e-9)); }

} // namespace detail

inline DyadicDecomposition dyadic_decomposition(const DomainSpec& D, const Polyline& p)
{
    validate(D, p);
    const std::size_t n = p.size();
    std::vector<double> delta(n), rdelta(n);
    for (std::size_t i = 0; i < n; ++i) delta[i] = boundary_distance(D, p.vertices[i]);
    std::reverse_copy(delta.begin(), delta.end(), rdelta.begin());

    DyadicDecomposition out;
    out.D_max = *std::max_element(delta.begin(), delta.end());
    out.N1 = detail::dyadic_count(out.D_max, delta.front());
    out.N2 = detail::dyadic_count(out.D_max, delta.back());
    const double last = static_cast<double>(n - 1);

    // Breakpoints in curve position with their delta values, from y1 to y2.
    std::vector<std::pair<double, double>> cuts;
    cuts.emplace_back(0.0, delta.front());
    for (int k = out.N1; k >= 0; --k) {
        const double level = std::ldexp(out.D_max, -k);
        cuts.emplace_back(detail::first_crossing(delta, level), level);
    }
    for (int k = 0; k <= out.N2; ++k) {
        const double level = std::ldexp(out.D_max, -k);
        cuts.emplace_back(last - detail::first_crossing(rdelta, level), level);
    }
    cuts.emplace_back(last, delta.back());

    const double tol = 1e-12 * out.D_max;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        DyadicPiece piece;
        piece.nu = static_cast<int>(c) - (out.N1 + 1);
        const double ua = cuts[c].first, ub = std::max(cuts[c].first, cuts[c + 1].first);
        piece.delta_start = cuts[c].second;
        piece.delta_end = cuts[c + 1].second;
        piece.points.push_back(detail::point_at(p, ua));
        for (std::size_t j = static_cast<std::size_t>(std::floor(ua)) + 1; static_cast<double>(j) < ub; ++j) {
            if (static_cast<double>(j) <= ua) continue;
            piece.points.push_back(p.vertices[j]);
            piece.max_vertex_delta = std::max(piece.max_vertex_delta, delta[j]);
        }
        piece.points.push_back(detail::point_at(p, ub));
        piece.degenerate = ub - ua < 1e-15 * std::max(1.0, last);

        const int a = std::abs(piece.nu);
        const double upper = std::ldexp(out.D_max, 1 - a), lower = std::ldexp(out.D_max, -a);
        if (piece.max_vertex_delta > upper + tol) out.invariants_hold = false;
        if (std::min(piece.delta_start, piece.delta_end) < lower * (1.0 - 1e-9)) out.invariants_hold = false;
        if (std::max(piece.delta_start, piece.delta_end) > upper + tol) out.invariants_hold = false;
        out.pieces.push_back(std::move(piece));
    }
    return out;
}

// Gehring-Hayman and separation records.

struct GHRecord {
    std::size_t pair_id = 0;
    double euclid = 0.0;   // |x - y|
    double l_d = 0.0;      // Euclidean length of the geodesic
    Interval l_k;          // Kobayashi length bracket of the geodesic
    double lambda = 1.0;
    double kappa = 0.0;
    double residual = 0.0; // c1 |x - y|^c2 - l_d
};

inline GHRecord gehring_hayman_record(const DomainSpec& D, const CPoint& x, const CPoint& y, const Polyline& geodesic,
                                      double c1, double c2, const GeodesicCertificate& cert,
                                      const MetricOptions& metric = {}, double lambda_max = 4.0)
{
    require(!(x == y), "gehring_hayman_record needs distinct endpoints");
    require(geodesic.front() == x && geodesic.back() == y, "geodesic endpoints do not match the pair");
    require(cert.lambda <= lambda_max, "geodesic certificate exceeds lambda_max");
    GHRecord r;
    r.euclid = distance(x, y);
    r.l_d = euclidean_length(geodesic);
    r.l_k = kobayashi_length_interval(D, geodesic, metric);
    r.lambda = cert.lambda;
    r.kappa = cert.kappa;
    r.residual = c1 * std::pow(r.euclid, c2) - r.l_d;
    return r;
}

struct SeparationRecord {
    std::size_t vertex = 0;
    double delta = 0.0;
    double min_arm = 0.0;  // min(l_d(left part), l_d(right part))
    double residual = 0.0; // delta - C_tilde * min_arm^alpha
};

inline std::vector<SeparationRecord> separation_record(const DomainSpec& D, const Polyline& geodesic, double C_tilde,
                                                       double alpha)
{
    validate(D, geodesic);
    const std::size_t n = geodesic.size();
    std::vector<double> cum(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) cum[i] = cum[i - 1] + distance(geodesic.vertices[i - 1], geodesic.vertices[i]);
    std::vector<SeparationRecord> out;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        SeparationRecord r;
        r.vertex = i;
        r.delta = boundary_distance(D, geodesic.vertices[i]);
        r.min_arm = std::min(cum[i], cum[n - 1] - cum[i]);
        r.residual = r.delta - C_tilde * std::pow(r.min_arm, alpha);
        out.push_back(r);
    }
    return out;
}

/// Largest C_tilde for which every record has a nonnegative residual.
inline double max_feasible_ctilde(const std::vector<SeparationRecord>& recs, double alpha)
{
    double c = std::numeric_limits<double>::infinity();
    for (const auto& r : recs)
        if (r.min_arm > 0.0) c = std::min(c, r.delta / std::pow(r.min_arm, alpha));
    return c;
}

// Hausdorff distance between two paths in the Kobayashi distance.

struct HausdorffOptions {
    int grid = 8; // sample points per segment
    DistanceOptions distance = [] {
        DistanceOptions o;
        o.upper = UpperPath::Straight;
        return o;
    }();
};

namespace detail {

inline std::vector<CPoint> resample(const Polyline& p, int grid)
{
    std::vector<CPoint> out;
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
        for (int k = 0; k < grid; ++k)
            out.push_back(lerp(p.vertices[i], p.vertices[i + 1], static_cast<double>(k) / grid));
    out.push_back(p.back());
    return out;
}

} // namespace detail

inline Interval hausdorff_distance_kobayashi(const DomainSpec& D, const Polyline& p1, const Polyline& p2,
                                             const HausdorffOptions& o = {})
{
    validate(D, p1);
    validate(D, p2);
    require(o.grid >= 1, "hausdorff grid must be positive");
    const std::vector<CPoint> a = detail::resample(p1, o.grid), b = detail::resample(p2, o.grid);
    std::vector<Interval> d(a.size() * b.size());
    parallel_for(a.size(), [&](std::size_t i) {
        for (std::size_t j = 0; j < b.size(); ++j) d[i * b.size() + j] = distance_bound(D, a[i], b[j], o.distance).value;
    });
    auto directed = [&](bool lo, bool rows) {
        double h = 0.0;
        const std::size_t outer = rows ? a.size() : b.size(), inner = rows ? b.size() : a.size();
        for (std::size_t i = 0; i < outer; ++i) {
            double m = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < inner; ++j) {
                const Interval& v = rows ? d[i * b.size() + j] : d[j * b.size() + i];
                m = std::min(m, lo ? v.lo : v.hi);
            }
            h = std::max(h, m);
        }
        return h;
    };
    return Interval(std::max(directed(true, true), directed(true, false)),
                    std::max(directed(false, true), directed(false, false)));
}

} // namespace kob
