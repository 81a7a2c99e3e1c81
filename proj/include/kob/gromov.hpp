#pragma once

// Gromov products, four-point hyperbolicity, Gromov sequences and the
// boundary experiments built on them.

#include <fstream>
#include <iomanip>
#include <sstream>

#include "kob/geodesic.hpp"

namespace kob {

struct GromovOptions {
    DistanceOptions distance = [] {
        DistanceOptions o;
        o.upper = UpperPath::Straight;
        return o;
    }();
};

/// Distance bracket used by the Gromov layer: a point interval on the disk
/// and ball (exact oracle), distance_bound elsewhere.
inline Interval pair_distance(const DomainSpec& D, const CPoint& x, const CPoint& y, const GromovOptions& o = {})
{
    if (x == y) return Interval::point(0.0);
    if (o.distance.optimize.metric.use_exact && has_exact_metric(D))
        return Interval::point(kobayashi_distance_exact(D, x, y));
    return distance_bound(D, x, y, o.distance).value;
}

/// (x|y)_w = (d(w,x) + d(w,y) - d(x,y)) / 2 in interval arithmetic.
inline Interval gromov_product(const Interval& dwx, const Interval& dwy, const Interval& dxy)
{
    return 0.5 * (dwx + dwy - dxy);
}

inline Interval gromov_product(const DomainSpec& D, const CPoint& w, const CPoint& x, const CPoint& y,
                               const GromovOptions& o = {})
{
    require_inside(D, w);
    require_inside(D, x);
    require_inside(D, y);
    return gromov_product(pair_distance(D, w, x, o), pair_distance(D, w, y, o), pair_distance(D, x, y, o));
}

// Distance matrices.

struct DistanceMatrix {
    std::vector<std::string> ids;
    std::vector<Interval> d; // row-major, size n*n

    std::size_t size() const { return ids.size(); }
    const Interval& operator()(std::size_t i, std::size_t j) const { return d[i * size() + j]; }
    Interval& operator()(std::size_t i, std::size_t j) { return d[i * size() + j]; }

    static DistanceMatrix zeros(std::size_t n)
    {
        DistanceMatrix m;
        for (std::size_t i = 0; i < n; ++i) m.ids.push_back("p" + std::to_string(i));
        m.d.assign(n * n, Interval::point(0.0));
        return m;
    }

    static DistanceMatrix from_values(const std::vector<std::vector<double>>& v)
    {
        DistanceMatrix m = zeros(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            require(v[i].size() == v.size(), "distance matrix must be square");
            for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = Interval::point(v[i][j]);
        }
        return m;
    }
};

inline DistanceMatrix distance_matrix(const DomainSpec& D, const std::vector<CPoint>& pts, const GromovOptions& o = {})
{
    DistanceMatrix m = DistanceMatrix::zeros(pts.size());
    const std::size_t n = pts.size();
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) m(i, j) = pair_distance(D, pts[i], pts[j], o);
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
    return m;
}

/// CSV with a header of point ids; each cell is "lo" or "lo:hi".
inline void write_matrix_csv(std::ostream& os, const DistanceMatrix& m)
{
    os << "id";
    for (const auto& id : m.ids) os << ',' << id;
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < m.size(); ++i) {
        os << m.ids[i];
        for (std::size_t j = 0; j < m.size(); ++j) {
            const Interval& v = m(i, j);
            os << ',' << v.lo;
            if (v.hi != v.lo) os << ':' << v.hi;
        }
        os << '\n';
    }
}

inline DistanceMatrix read_matrix_csv(std::istream& is)
{
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        return cells;
    };
    auto number = [](const std::string& s, std::size_t row, std::size_t col) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            fail(Errc::ParseError, "matrix CSV line " + std::to_string(row) + " column " + std::to_string(col) +
                                       ": not a number '" + s + "'");
        }
    };
    std::string line;
    if (!std::getline(is, line)) fail(Errc::ParseError, "matrix CSV is empty");
    const auto header = split(line);
    require(header.size() >= 2, "matrix CSV header needs point ids");
    DistanceMatrix m;
    m.ids.assign(header.begin() + 1, header.end());
    const std::size_t n = m.ids.size();
    m.d.assign(n * n, Interval::point(0.0));
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(is, line)) fail(Errc::ParseError, "matrix CSV has fewer rows than ids");
        const auto cells = split(line);
        if (cells.size() != n + 1)
            fail(Errc::ParseError, "matrix CSV line " + std::to_string(i + 2) + " has the wrong number of cells");
        for (std::size_t j = 0; j < n; ++j) {
            const std::string& c = cells[j + 1];
            const auto colon = c.find(':');
            const double lo = number(c.substr(0, colon), i + 2, j + 2);
            const double hi = colon == std::string::npos ? lo : number(c.substr(colon + 1), i + 2, j + 2);
            if (lo > hi) fail(Errc::ParseError, "matrix CSV cell with lo > hi");
            m(i, j) = Interval(lo, hi);
        }
    }
    return m;
}

// Four-point condition.

namespace detail {

inline void check_matrix(const DistanceMatrix& m)
{
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const Interval& a = m(i, j);
            if (a.lo < 0.0 || std::abs(a.lo - m(j, i).lo) > 1e-12 * (1 + a.lo) ||
                std::abs(a.hi - m(j, i).hi) > 1e-12 * (1 + a.hi))
                fail(Errc::MatrixInconsistent, "distance matrix is not symmetric and nonnegative");
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                if (m(i, k).hi > m(i, j).hi + m(j, k).hi + 1e-9 * (1 + m(i, k).hi))
                    fail(Errc::MatrixInconsistent, "triangle inequality fails at the upper endpoints for (" +
                                                       m.ids[i] + ", " + m.ids[j] + ", " + m.ids[k] + ")");
}

} // namespace detail

/// delta-hat = max over sampled (o,x,y,z) of min{(x|z)_o, (z|y)_o} - (x|y)_o,
/// once with all lower and once with all upper endpoints.
inline Interval four_point_delta(const DistanceMatrix& m, std::size_t quadruples, std::uint64_t seed)
{
    require(m.size() >= 4, "four_point_delta needs at least 4 points");
    require(quadruples >= 1, "four_point_delta needs at least one quadruple");
    detail::check_matrix(m);
    const std::size_t n = m.size();
    constexpr std::size_t kBlock = 256;
    const std::size_t blocks = (quadruples + kBlock - 1) / kBlock;
    std::vector<double> best_lo(blocks, 0.0), best_hi(blocks, 0.0);
    const std::uint32_t stream = stream_id("four-point");
    parallel_for(blocks, [&](std::size_t b) {
        CounterRng rng(seed, stream, b);
        const std::size_t end = std::min(quadruples, (b + 1) * kBlock);
        for (std::size_t q = b * kBlock; q < end; ++q) {
            const std::size_t o = rng.below(n), x = rng.below(n), y = rng.below(n), z = rng.below(n);
            for (int side = 0; side < 2; ++side) {
                auto d = [&](std::size_t i, std::size_t j) { return side == 0 ? m(i, j).lo : m(i, j).hi; };
                auto prod = [&](std::size_t a, std::size_t c) { return 0.5 * (d(o, a) + d(o, c) - d(a, c)); };
                const double defect = std::min(prod(x, z), prod(z, y)) - prod(x, y);
                double& slot = side == 0 ? best_lo[b] : best_hi[b];
                slot = std::max(slot, defect);
            }
        }
    });
    const double a = *std::max_element(best_lo.begin(), best_lo.end());
    const double c = *std::max_element(best_hi.begin(), best_hi.end());
    return Interval::hull(a, c);
}

// Gromov sequences.

struct SequenceOptions {
    double threshold = 5.0;
    std::size_t trend_terms = 4;
    double limit_delta = 1e-3; // relative to the diameter: tail close enough to the boundary for a limit
    GromovOptions gromov{};
};

struct SequenceDiagnostic {
    bool is_gromov = false;
    std::optional<CPoint> euclid_limit;
    std::vector<Interval> consecutive; // (x_k | x_{k+1})_w over the tail
    double min_tail_product = 0.0;     // lower endpoint, over all tail pairs
};

inline SequenceDiagnostic gromov_sequence_check(const DomainSpec& D, const std::vector<CPoint>& seq, const CPoint& w,
                                                const SequenceOptions& o = {})
{
    require(seq.size() >= 8, "gromov_sequence_check needs at least 8 points");
    require(o.trend_terms >= 2, "trend needs at least two terms");
    const std::size_t n = seq.size(), t0 = n - o.trend_terms;
    std::vector<Interval> dw(n);
    for (std::size_t i = t0; i < n; ++i) dw[i] = pair_distance(D, w, seq[i], o.gromov);
    SequenceDiagnostic out;
    double lo_min = std::numeric_limits<double>::infinity(), hi_min = lo_min;
    for (std::size_t i = t0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const Interval p = gromov_product(dw[i], dw[j], pair_distance(D, seq[i], seq[j], o.gromov));
            lo_min = std::min(lo_min, p.lo);
            hi_min = std::min(hi_min, p.hi);
            if (j == i + 1) out.consecutive.push_back(p);
        }
    out.min_tail_product = lo_min;
    bool trend = true, trend_hi = true;
    for (std::size_t k = 1; k < out.consecutive.size(); ++k) {
        trend = trend && out.consecutive[k].lo > out.consecutive[k - 1].lo;
        trend_hi = trend_hi && out.consecutive[k].hi > out.consecutive[k - 1].lo;
    }
    const bool certain = lo_min > o.threshold && trend;
    const bool possible = hi_min > o.threshold && trend_hi;
    if (possible && !certain)
        fail(Errc::Inconclusive, "Gromov products straddle the divergence threshold within their interval widths");
    out.is_gromov = certain;
    if (out.is_gromov && boundary_distance(D, seq.back()) < o.limit_delta * D.diameter_scale) {
        try {
            out.euclid_limit = boundary_projection(D, seq.back()).point;
        } catch (const Error& e) {
            if (e.code() != Errc::ProjectionAmbiguous) throw;
        }
    }
    return out;
}

/// x_k = p + t0 2^-k n_p, k = 0..count-1.
inline std::vector<CPoint> normal_sequence(const BoundaryPoint& p, double t0, std::size_t count)
{
    std::vector<CPoint> s;
    for (std::size_t k = 0; k < count; ++k) s.push_back(p.point + std::ldexp(t0, -static_cast<int>(k)) * p.inner_normal);
    return s;
}

// Boundary pairs and visual quasi-metrics.

struct BoundaryPairOptions {
    double t0 = 0.5;
    int max_k = 60;
    double stable_tol = 0.01;
    double diverge_threshold = 12.0;
    double min_depth = 1e-12; // relative to the diameter: below this the approach is not resolved
    GromovOptions gromov{};
};

struct GromovProductSample {
    CPoint base, x, y;
    Interval product;
};

struct BoundaryPairExperiment {
    BoundaryPoint p, q;
    std::vector<GromovProductSample> products;
    std::optional<Interval> extrapolated; // [last.lo, last.hi + 2 delta-hat] once stabilized
    bool diverged = false;                // products exceeded the divergence threshold (p = q regime)
};

inline BoundaryPairExperiment boundary_pair_experiment(const DomainSpec& D, const BoundaryPoint& p,
                                                       const BoundaryPoint& q, const CPoint& w, double delta_hat,
                                                       const BoundaryPairOptions& o = {})
{
    require(delta_hat >= 0.0, "delta-hat must be nonnegative");
    BoundaryPairExperiment e{p, q, {}, std::nullopt, false};
    for (int k = 0; k <= o.max_k; ++k) {
        const double t = std::ldexp(o.t0, -k);
        if (t < o.min_depth * D.diameter_scale) break;
        const CPoint x = p.point + t * p.inner_normal, y = q.point + t * q.inner_normal;
        if (!D.contains(x) || !D.contains(y)) {
            if (k == 0) fail(Errc::InvalidInput, "initial approach step leaves the domain; lower t0");
            break;
        }
        e.products.push_back({w, x, y, gromov_product(D, w, x, y, o.gromov)});
        const std::size_t m = e.products.size();
        if (e.products.back().product.lo > o.diverge_threshold) {
            e.diverged = true;
            break;
        }
        if (m >= 3) {
            const double a = e.products[m - 3].product.mid(), b = e.products[m - 2].product.mid(),
                         c = e.products[m - 1].product.mid();
            if (std::abs(b - a) < o.stable_tol && std::abs(c - b) < o.stable_tol) {
                const Interval& last = e.products.back().product;
                e.extrapolated = Interval(last.lo, last.hi + 2.0 * delta_hat);
                break;
            }
        }
    }
    return e;
}

/// rho_G = e^{-eps (p|q)_w} with comparability constant 1.
inline Interval visual_quasimetric(const BoundaryPairExperiment& e, double eps)
{
    require(eps > 0.0, "visual parameter eps must be positive");
    if (e.diverged) return Interval(0.0, std::exp(-eps * e.products.back().product.lo));
    if (!e.extrapolated) fail(Errc::NotStabilized, "Gromov products did not stabilize along the approach");
    return Interval(std::exp(-eps * e.extrapolated->hi), std::exp(-eps * e.extrapolated->lo));
}

// Hoelder exponents of rho_G against |p - q|.

struct HolderSample {
    double euclid;  // |p - q|
    Interval rho_g;
};

struct HolderFit {
    double upper_exponent = 0.0; // slope of the per-decade maxima of log rho_G
    double lower_exponent = 0.0; // slope of the per-decade minima of log rho_G
    double slope = 0.0;          // weighted least-squares slope through the midpoints
    double fit_quality = 0.0;    // r^2 of that fit
};

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w,
                       double* r2 = nullptr)
{
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
        syy += w[i] * (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) fail(Errc::InsufficientSpread, "regressor has no spread");
    const double b = sxy / sxx;
    if (r2) *r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return b;
}

} // namespace detail

inline HolderFit fit_holder(const std::vector<HolderSample>& s)
{
    require(!s.empty(), "fit_holder needs samples");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    for (const auto& h : s) {
        require(h.euclid > 0.0 && h.rho_g.lo > 0.0, "Hoelder fit needs positive |p-q| and rho_G");
        xmin = std::min(xmin, std::log10(h.euclid));
        xmax = std::max(xmax, std::log10(h.euclid));
    }
    if (xmax - xmin < 2.0 - 1e-9) fail(Errc::InsufficientSpread, "boundary pairs must span at least two decades");
    std::vector<double> x, y, w;
    for (const auto& h : s) {
        x.push_back(std::log(h.euclid));
        y.push_back(0.5 * (std::log(h.rho_g.lo) + std::log(h.rho_g.hi)));
        const double width = std::log(h.rho_g.hi) - std::log(h.rho_g.lo);
        w.push_back(1.0 / (1.0 + width * width));
    }
    HolderFit f;
    f.slope = detail::ls_slope(x, y, w, &f.fit_quality);
    // Per-decade envelopes: in each decade keep the sample lying lowest
    // (resp. highest) relative to the overall fit, then fit those points.
    const int first = static_cast<int>(std::floor(xmin)), last = static_cast<int>(std::floor(xmax));
    std::vector<double> lx, ly, ux, uy, ones;
    for (int dec = first; dec <= last; ++dec) {
        std::optional<std::size_t> bl, bu;
        double rl = 0, ru = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double l10 = std::log10(s[i].euclid);
            const int bin = std::min(last, static_cast<int>(std::floor(l10)));
            if (bin != dec) continue;
            const double lo = std::log(s[i].rho_g.lo) - f.slope * x[i], hi = std::log(s[i].rho_g.hi) - f.slope * x[i];
            if (!bl || lo < rl) bl = i, rl = lo;
            if (!bu || hi > ru) bu = i, ru = hi;
        }
        if (!bl) continue;
        lx.push_back(x[*bl]);
        ly.push_back(std::log(s[*bl].rho_g.lo));
        ux.push_back(x[*bu]);
        uy.push_back(std::log(s[*bu].rho_g.hi));
        ones.push_back(1.0);
    }
    if (ones.size() < 2) fail(Errc::InsufficientSpread, "boundary pairs must populate at least two decades");
    f.lower_exponent = detail::ls_slope(lx, ly, ones);
    f.upper_exponent = detail::ls_slope(ux, uy, ones);
    return f;
}
/// Random boundary pairs with |p - q| log-uniform in [dmin, dmax].
inline std::vector<std::pair<BoundaryPoint, BoundaryPoint>>
sample_boundary_pairs(const DomainSpec& D, std::size_t count, double dmin, double dmax, std::uint64_t seed)
{
    std::vector<std::pair<BoundaryPoint, BoundaryPoint>> out(count);
    const std::uint32_t stream = stream_id("boundary-pairs");
    parallel_for(count, [&](std::size_t i) {
        CounterRng rng(seed, stream, i);
        const BoundaryPoint p = boundary_point_towards(D, rng.unit_vector(D.dim()));
        const double target = std::exp(std::log(dmin) + (std::log(dmax) - std::log(dmin)) * rng.uniform());
        // Walk from p along a random direction and pull back to the boundary
        // along the ray from the deep point; rescale the step until |p-q| is on target.
        CVector u = rng.unit_vector(D.dim());
        u = u - hdot(u, p.inner_normal) * p.inner_normal;
        if (u.norm() < 1e-12) u = CVector::basis(D.dim(), 0);
        u = u.normalized();
        double step = target;
        BoundaryPoint q = p;
        for (int it = 0; it < 60; ++it) {
            q = boundary_point_towards(D, (p.point + step * u) - D.deep_point);
            const double d = distance(p.point, q.point);
            if (std::abs(d / target - 1.0) < 1e-6) break;
            step *= target / d;
        }
        out[i] = {p, q};
    });
    return out;
}

struct HolderOptions {
    double dmin = 1e-3, dmax = 1.0;
    double delta_hat = 0.0;
    BoundaryPairOptions pair{};
};

struct HolderRun {
    std::vector<HolderSample> samples;
    std::vector<BoundaryPairExperiment> experiments;
    HolderFit fit;
};

/// Samples boundary pairs, extrapolates (p|q)_w along normal approaches and
/// fits rho_G = e^{-eps (p|q)_w} against |p - q|.
inline HolderRun boundary_holder_fit(const DomainSpec& D, const CPoint& w, double eps, std::size_t pairs,
                                     std::uint64_t seed, const HolderOptions& o = {})
{
    require(eps > 0.0, "visual parameter eps must be positive");
    require(o.dmin > 0.0 && o.dmax > o.dmin, "need 0 < dmin < dmax");
    const auto bp = sample_boundary_pairs(D, pairs, o.dmin, o.dmax, seed);
    HolderRun run;
    run.experiments.resize(pairs);
    run.samples.resize(pairs);
    parallel_for(pairs, [&](std::size_t i) {
        run.experiments[i] = boundary_pair_experiment(D, bp[i].first, bp[i].second, w, o.delta_hat, o.pair);
        run.samples[i] = {distance(bp[i].first.point, bp[i].second.point), visual_quasimetric(run.experiments[i], eps)};
    });
    run.fit = fit_holder(run.samples);
    return run;
}

// Visibility ratio.

struct VisibilityRecord {
    double t = 0.0;              // approach depth
    double euclid = 0.0;         // |x_t - y_t|
    Interval distance_to_base;   // K(w, [x_t, y_t]) over samples of the optimized geodesic
    Interval ratio;              // distance_to_base / log(1/|x_t - y_t|)
    bool asymptotic = true;      // false when log(1/|x_t-y_t|) is not positive enough to normalize
};

struct VisibilityOptions {
    int steps = 8;
    std::size_t samples = 256; // points along the geodesic where K(w, .) is evaluated
    OptimizeOptions optimize{};
    GromovOptions gromov{};
};

/// For x_t = p + t n_p, y_t = q + t n_q with t = t0 2^-k, optimize the
/// geodesic [x_t, y_t] and record its distance to w against log(1/|x_t - y_t|).
inline std::vector<VisibilityRecord> visibility_ratio(const DomainSpec& D, const CPoint& w, const BoundaryPoint& p,
                                                      const BoundaryPoint& q, double t0,
                                                      const VisibilityOptions& o = {})
{
    require(!(p.point == q.point), "visibility_ratio needs distinct boundary points");
    require_inside(D, w);
    std::vector<VisibilityRecord> out;
    for (int k = 0; k < o.steps; ++k) {
        const double t = std::ldexp(t0, -k);
        const CPoint x = p.point + t * p.inner_normal, y = q.point + t * q.inner_normal;
        const Polyline g = optimize_path(D, seed_path(D, x, y), o.optimize).path;
        Interval best(std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
        const int grid = std::max<int>(1, static_cast<int>(o.samples / (g.size() - 1)));
        for (const CPoint& v : detail::resample(g, grid)) {
            const Interval d = pair_distance(D, w, v, o.gromov);
            best = Interval(std::min(best.lo, d.lo), std::min(best.hi, d.hi));
        }
        VisibilityRecord r;
        r.t = t;
        r.euclid = distance(x, y);
        r.distance_to_base = best;
        const double L = std::log(1.0 / r.euclid);
        r.asymptotic = L > std::log(2.0);
        r.ratio = L > 0.0 ? Interval(best.lo / L, best.hi / L) : Interval::point(0.0);
        out.push_back(r);
    }
    return out;
}

} // namespace kob
