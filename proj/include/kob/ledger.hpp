#pragma once

// Constant chains of the Gehring-Hayman and separation arguments. The
// formula layer is exact arithmetic on the displayed expressions, carried in
// logarithms because C-tilde underflows for large N; the calibration layer
// supplies empirical K, K'', R and the BB constants.

#include <json.hpp>

#include "kob/gromov.hpp"

namespace kob {

// C(N) = sup_{x>0} log(1+x) / x^(1/N).

namespace detail {

inline double softplus(double u) { return u > 30.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

// log of log(1+x)/x^(1/N) at x = e^u.
inline double log_constant_objective(double u, int N) { return std::log(softplus(u)) - u / N; }

} // namespace detail

inline double log_constant(int N)
{
    require(N >= 1, "log_constant needs N >= 1");
    if (N == 1) return 1.0; // log(1+x) <= x, tight as x -> 0
    const double a = std::log(1e-8), b = std::max(40.0, 3.0 * N);
    constexpr int kScan = 2000;
    int best = 0;
    double fbest = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kScan; ++i) {
        const double f = detail::log_constant_objective(a + (b - a) * i / kScan, N);
        if (f > fbest) fbest = f, best = i;
    }
    const double h = (b - a) / kScan;
    double lo = a + (best - 1) * h, hi = a + (best + 1) * h;
    constexpr double kGolden = 0.6180339887498949;
    double c = hi - kGolden * (hi - lo), d = lo + kGolden * (hi - lo);
    double fc = detail::log_constant_objective(c, N), fd = detail::log_constant_objective(d, N);
    for (int it = 0; it < 100; ++it) {
        if (fc > fd) {
            hi = d, d = c, fd = fc;
            c = hi - kGolden * (hi - lo);
            fc = detail::log_constant_objective(c, N);
        } else {
            lo = c, c = d, fc = fd;
            d = lo + kGolden * (hi - lo);
            fd = detail::log_constant_objective(d, N);
        }
    }
    return std::exp(std::max({fbest, fc, fd}));
}

struct LogConstantCertificate {
    double C = 0.0;
    std::size_t grid_points = 0;
    std::size_t violations = 0;
    double worst_ratio = 0.0; // max of log(1+x) / (C x^(1/N)) on the grid
};

/// Checks log(1+x) <= C(N) x^(1/N) on a log grid over [1e-8, 1e8]; a point
/// counts as a violation beyond 1e-13 relative rounding slack.
inline LogConstantCertificate certify_log_constant(int N, std::size_t grid = 10000)
{
    require(grid >= 2, "certificate grid needs at least two points");
    LogConstantCertificate cert{log_constant(N), grid, 0, 0.0};
    for (std::size_t i = 0; i < grid; ++i) {
        const double x = std::pow(10.0, -8.0 + 16.0 * static_cast<double>(i) / (grid - 1));
        const double ratio = std::log1p(x) / (cert.C * std::pow(x, 1.0 / N));
        cert.worst_ratio = std::max(cert.worst_ratio, ratio);
        if (ratio > 1.0 + 1e-13) ++cert.violations;
    }
    return cert;
}

// Ledgers.

enum class Track { MConvex, StronglyPseudoconvex };

inline std::string_view track_name(Track t) { return t == Track::MConvex ? "mconvex" : "spsc"; }

enum class CTildeVariant { Consistent, Verbatim };

inline std::string_view variant_name(CTildeVariant v) { return v == CTildeVariant::Consistent ? "consistent" : "verbatim"; }

struct ConstantLedger {
    Track track = Track::MConvex;
    // inputs
    double m = 0.0; // MConvex only
    int N = 0;
    double lambda = 1.0, A = 1.0, C = 1.0, C1 = 1.0;
    // formula layer (logs where the value can leave double range)
    double C_of_N = 0.0;
    double alpha = 0.0;
    double log_C_prime = 0.0, log_C_doubleprime = 0.0;
    double log_C_tilde_verbatim = 0.0, log_C_tilde_consistent = 0.0;
    double c2 = 0.0;
    double alpha_limit = 0.0; // 3m^2 - 2m or 4
    double c2_bound = 0.0;    // 1/(12m^2 - 8m) or 1/16
    bool strict_bounds_hold = false;
    // theorem layer, filled by theorem_constants
    std::optional<double> K, K_prime, K_doubleprime, R, log_c1;
    CTildeVariant variant = CTildeVariant::Consistent;

    double C_prime() const { return std::exp(log_C_prime); }
    double C_doubleprime() const { return std::exp(log_C_doubleprime); }
    double C_tilde_verbatim() const { return std::exp(log_C_tilde_verbatim); }
    double C_tilde_consistent() const { return std::exp(log_C_tilde_consistent); }
    double log_C_tilde(CTildeVariant v) const
    {
        return v == CTildeVariant::Consistent ? log_C_tilde_consistent : log_C_tilde_verbatim;
    }
    std::optional<double> c1() const
    {
        if (!log_c1) return std::nullopt;
        return std::exp(*log_c1);
    }
};

namespace detail {

inline void finish_bounds(ConstantLedger& L)
{
    L.c2 = 1.0 / (4.0 * L.alpha);
    L.strict_bounds_hold = L.alpha > L.alpha_limit && L.c2 < L.c2_bound;
}

} // namespace detail

/// alpha = (3m - 2 - m/N)/(1/m - 1/N), C' = (2^(1+1/m) lambda C(N) A^(1/N) C)^(1/(1-1/N)),
/// C'' = (4 A C')^(2m) C^m; C-tilde verbatim C''/(2C'), consistent 1/(C'' (2C')^alpha).
inline ConstantLedger mconvex_chain(double m, int N, double lambda, double A, double C)
{
    require(std::isfinite(m) && m >= 1.0, "m must be >= 1");
    require(N > m, "N must exceed m");
    require(lambda >= 1.0 && std::isfinite(lambda), "lambda must be >= 1");
    require(A > 0.0 && std::isfinite(A), "A must be positive");
    require(C > 0.0 && std::isfinite(C), "C must be positive");
    ConstantLedger L;
    L.track = Track::MConvex;
    L.m = m, L.N = N, L.lambda = lambda, L.A = A, L.C = C, L.C1 = std::numeric_limits<double>::quiet_NaN();
    L.C_of_N = log_constant(N);
    L.alpha = (3.0 * m - 2.0 - m / N) / (1.0 / m - 1.0 / N);
    const double log2 = std::log(2.0);
    L.log_C_prime = ((1.0 + 1.0 / m) * log2 + std::log(lambda) + std::log(L.C_of_N) + std::log(A) / N + std::log(C)) /
                    (1.0 - 1.0 / N);
    L.log_C_doubleprime = 2.0 * m * (std::log(4.0) + std::log(A) + L.log_C_prime) + m * std::log(C);
    L.log_C_tilde_verbatim = L.log_C_doubleprime - log2 - L.log_C_prime;
    L.log_C_tilde_consistent = -L.log_C_doubleprime - L.alpha * (log2 + L.log_C_prime);
    L.alpha_limit = 3.0 * m * m - 2.0 * m;
    L.c2_bound = 1.0 / (12.0 * m * m - 8.0 * m);
    detail::finish_bounds(L);
    // alpha - (3m^2 - 2m) = 3m^2 (m - 1)/(N - m): strict for m > 1, equality at m = 1.
    if (m > 1.0 && !L.strict_bounds_hold) fail(Errc::InvalidInput, "m-convex ledger violates its strict bounds");
    return L;
}

/// C' = (2^(1/2) lambda C(N) A^(1/N) / C1)^(N/(N-1)), C'' = (4 A C')^(2N/(N-1)),
/// alpha = (1 + N^2/(N-1)^2)(1 - 1/N)/(1/2 - 1/N); C-tilde verbatim
/// min(C'', e^(-2NC))/C', consistent min(e^(-2NC), 1/C'')/(2C')^alpha.
inline ConstantLedger spsc_chain(int N, double lambda, double A, double C1, double C)
{
    require(N > 2, "N must exceed 2");
    require(lambda >= 1.0 && std::isfinite(lambda), "lambda must be >= 1");
    require(A > 0.0 && std::isfinite(A), "A must be positive");
    require(C1 > 0.0 && std::isfinite(C1), "C1 must be positive");
    require(C > 0.0 && std::isfinite(C), "C must be positive");
    ConstantLedger L;
    L.track = Track::StronglyPseudoconvex;
    L.m = std::numeric_limits<double>::quiet_NaN();
    L.N = N, L.lambda = lambda, L.A = A, L.C = C, L.C1 = C1;
    L.C_of_N = log_constant(N);
    const double n = N, r = n / (n - 1.0);
    L.alpha = (1.0 + r * r) * (1.0 - 1.0 / n) / (0.5 - 1.0 / n);
    const double log2 = std::log(2.0);
    L.log_C_prime = (0.5 * log2 + std::log(lambda) + std::log(L.C_of_N) + std::log(A) / n - std::log(C1)) * r;
    L.log_C_doubleprime = 2.0 * r * (std::log(4.0) + std::log(A) + L.log_C_prime);
    L.log_C_tilde_verbatim = std::min(L.log_C_doubleprime, -2.0 * n * C) - L.log_C_prime;
    L.log_C_tilde_consistent = std::min(-2.0 * n * C, -L.log_C_doubleprime) - L.alpha * (log2 + L.log_C_prime);
    L.alpha_limit = 4.0;
    L.c2_bound = 1.0 / 16.0;
    detail::finish_bounds(L);
    if (!L.strict_bounds_hold) fail(Errc::InvalidInput, "strongly pseudoconvex ledger violates its strict bounds");
    return L;
}

/// N grid exposing the alpha / C-tilde trade-off.
inline std::vector<int> default_n_grid(Track t, double m)
{
    const int first = t == Track::MConvex ? static_cast<int>(std::ceil(2.0 * m)) + 1 : 5;
    std::vector<int> g{first};
    for (int n : {10, 100, 10000})
        if (n > g.back()) g.push_back(n);
    return g;
}

struct Hats {
    double K = 0.0;
    std::optional<double> K_prime; // defaults to K - log(1/(A+1)^2)/4
    double K_doubleprime = 0.0;
    double R = 0.0;                // strongly pseudoconvex track only
};

/// c2 = 1/(4 alpha); c1 = 2 (e^(2K' + 2K'' [+ 2R]) / C-tilde)^(1/alpha) joined
/// with 2A (m-convex) or A lambda / C1 (strongly pseudoconvex).
inline ConstantLedger theorem_constants(ConstantLedger L, const Hats& h,
                                        CTildeVariant variant = CTildeVariant::Consistent)
{
    require(L.alpha > 0.0 && L.N > 0, "theorem_constants needs a complete ledger");
    require(std::isfinite(h.K) && std::isfinite(h.K_doubleprime) && std::isfinite(h.R), "hats must be finite");
    L.K = h.K;
    L.K_prime = h.K_prime.value_or(h.K - 0.25 * std::log(1.0 / ((L.A + 1.0) * (L.A + 1.0))));
    L.K_doubleprime = h.K_doubleprime;
    L.variant = variant;
    double exponent = 2.0 * *L.K_prime + 2.0 * h.K_doubleprime;
    double floor_term;
    if (L.track == Track::MConvex) {
        floor_term = std::log(2.0 * L.A);
    } else {
        L.R = h.R;
        exponent += 2.0 * h.R;
        floor_term = std::log(L.A * L.lambda / L.C1);
    }
    const double main = std::log(2.0) + (exponent - L.log_C_tilde(variant)) / L.alpha;
    L.log_c1 = std::max(main, floor_term);
    return L;
}

// JSON dump.

inline nlohmann::json ledger_json(const ConstantLedger& L)
{
    using nlohmann::json;
    auto entry = [](double value, std::string formula, std::string provenance, std::optional<double> log = {}) {
        json e{{"formula", std::move(formula)}, {"provenance", std::move(provenance)}};
        e["value"] = std::isfinite(value) ? json(value) : json(nullptr);
        if (log) e["log"] = *log;
        return e;
    };
    const bool mc = L.track == Track::MConvex;
    json j;
    j["track"] = track_name(L.track);
    j["N"] = L.N;
    json c;
    if (mc) c["m"] = entry(L.m, "m-convexity order", "input");
    c["lambda"] = entry(L.lambda, "quasi-geodesic multiplicative constant", "input");
    c["A"] = entry(L.A, "K(x,y) <= log(1 + A|x-y|/sqrt(delta(x)delta(y)))", "calibrated");
    c["C"] = entry(L.C, mc ? "m-convexity constant" : "log-ratio constant of the lower distance bound", "input");
    if (!mc) c["C1"] = entry(L.C1, "k(z;v) >= C1|v|/delta(z)^(1/2)", "calibrated");
    c["C_of_N"] = entry(L.C_of_N, "sup_{x>0} log(1+x)/x^(1/N)", "formula");
    c["alpha"] = entry(L.alpha, mc ? "(3m-2-m/N)/(1/m-1/N)" : "(1+N^2/(N-1)^2)(1-1/N)/(1/2-1/N)", "formula");
    c["C_prime"] = entry(L.C_prime(),
                         mc ? "(2^(1+1/m) lambda C(N) A^(1/N) C)^(1/(1-1/N))"
                            : "(2^(1/2) lambda C(N) A^(1/N)/C1)^(N/(N-1))",
                         "formula", L.log_C_prime);
    c["C_doubleprime"] =
        entry(L.C_doubleprime(), mc ? "(4AC')^(2m) C^m" : "(4AC')^(2N/(N-1))", "formula", L.log_C_doubleprime);
    c["C_tilde_verbatim"] =
        entry(L.C_tilde_verbatim(), mc ? "C''/(2C')" : "min(C'', e^(-2NC))/C'", "formula", L.log_C_tilde_verbatim);
    c["C_tilde_consistent"] = entry(L.C_tilde_consistent(),
                                    mc ? "1/(C'' (2C')^alpha)" : "min(e^(-2NC), 1/C'')/(2C')^alpha", "formula",
                                    L.log_C_tilde_consistent);
    c["c2"] = entry(L.c2, "1/(4 alpha)", "formula");
    if (L.K) c["K"] = entry(*L.K, "max (1/2) log(1/delta(z)) - K(omega,z)", "calibrated");
    if (L.K_prime) c["K_prime"] = entry(*L.K_prime, "K - (1/4) log(1/(A+1)^2)", "formula");
    if (L.K_doubleprime)
        c["K_doubleprime"] = entry(*L.K_doubleprime, "max K(omega,z) - (1/2) log(1/delta(z))", "calibrated");
    if (L.R) c["R"] = entry(*L.R, "Hausdorff distance between re-seeded quasi-geodesics", "calibrated");
    if (L.log_c1)
        c["c1"] = entry(*L.c1(),
                        mc ? "2 (e^(2K'+2K'')/C-tilde)^(1/alpha) v 2A"
                           : "2 (e^(2K'+2K''+2R)/C-tilde)^(1/alpha) v A lambda/C1",
                        "formula", *L.log_c1);
    j["constants"] = c;
    j["c_tilde_variant"] = variant_name(L.variant);
    j["alpha_limit"] = L.alpha_limit;
    j["c2_bound"] = L.c2_bound;
    j["strict_bounds_hold"] = L.strict_bounds_hold;
    return j;
}

// Calibration layer.

struct EmpiricalHats {
    double K = -std::numeric_limits<double>::infinity();
    double K_doubleprime = -std::numeric_limits<double>::infinity();
    double R = 0.0;
    std::optional<double> C_lower; // ball-like domains only
    std::optional<double> C1;
    std::size_t samples = 0;
    std::size_t r_pairs = 0;
};

struct HatsOptions {
    std::size_t r_pairs = 4;       // pairs used for the Hausdorff estimate of R
    // Sampling of the compared paths. Euclidean-uniform samples are sparse in
    // the Kobayashi metric near the boundary, so R-hat includes a sampling gap.
    std::size_t r_max_vertices = 17;
    int r_grid = 2;
    GromovOptions gromov{};
    OptimizeOptions optimize{};
};

namespace detail {

inline Polyline decimate(const Polyline& p, std::size_t max_vertices)
{
    if (p.size() <= max_vertices) return p;
    Polyline out;
    const std::size_t stride = (p.size() - 1 + max_vertices - 2) / (max_vertices - 1);
    for (std::size_t i = 0; i < p.size(); i += stride) out.vertices.push_back(p.vertices[i]);
    if (!(out.vertices.back() == p.back())) out.vertices.push_back(p.back());
    return out;
}

} // namespace detail

/// K-hat = max (1/2) log(1/delta(z)) - K_lo(omega, z), K''-hat = max K_hi(omega, z)
/// - (1/2) log(1/delta(z)), R-hat = max Hausdorff distance between optimized
/// paths started from the straight and a bent seed. The base point counts as a
/// sample.
inline EmpiricalHats empirical_hats(const DomainSpec& D, const CPoint& w, std::size_t samples, std::uint64_t seed,
                                    const HatsOptions& o = {})
{
    require(samples >= 2, "empirical_hats needs at least two samples");
    require_inside(D, w);
    std::vector<CPoint> z(samples);
    std::vector<double> k_lo(samples), k_hi(samples), delta(samples);
    const std::uint32_t stream = stream_id("empirical-hats");
    parallel_for(samples, [&](std::size_t i) {
        CounterRng rng(seed, stream, i);
        z[i] = sample_interior_point(D, rng, i % 2 ? SampleLaw::NearBoundary : SampleLaw::Uniform);
        delta[i] = boundary_distance(D, z[i]);
        const Interval d = pair_distance(D, w, z[i], o.gromov);
        k_lo[i] = 0.5 * std::log(1.0 / delta[i]) - d.lo;
        k_hi[i] = d.hi - 0.5 * std::log(1.0 / delta[i]);
    });
    EmpiricalHats h;
    h.samples = samples;
    // The base point itself is always a sample: K(omega, omega) = 0.
    const double at_base = 0.5 * std::log(1.0 / boundary_distance(D, w));
    h.K = std::max(at_base, *std::max_element(k_lo.begin(), k_lo.end()));
    h.K_doubleprime = std::max(-at_base, *std::max_element(k_hi.begin(), k_hi.end()));

    if (has_exact_metric(D)) {
        double cl = 0.0, c1 = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < samples; ++i) {
            const std::size_t j = (i + 1) % samples;
            if (!(z[i] == z[j]))
                cl = std::max(cl, 0.5 * std::abs(std::log(delta[i] / delta[j])) - kobayashi_distance_exact(D, z[i], z[j]));
            CounterRng rng(seed, stream_id("empirical-hats-v"), i);
            const CVector v = rng.unit_vector(D.dim());
            c1 = std::min(c1, kobayashi_exact(D, z[i], v) * std::sqrt(delta[i]));
        }
        h.C_lower = cl;
        h.C1 = c1;
    }

    const std::size_t pairs = std::min(o.r_pairs, samples / 2);
    std::vector<double> r(pairs, 0.0);
    for (std::size_t i = 0; i < pairs; ++i) {
        const CPoint& x = z[2 * i];
        const CPoint& y = z[2 * i + 1];
        if (x == y) continue;
        const Polyline straight = optimize_path(D, seed_path(D, x, y), o.optimize).path;
        // Bent seed: the midpoint pushed a quarter of its depth along a random direction.
        CounterRng rng(seed, stream_id("empirical-hats-bend"), i);
        const CPoint m = midpoint(x, y);
        const CPoint bent_mid = m + 0.25 * boundary_distance(D, m) * rng.unit_vector(D.dim());
        Polyline bent_seed;
        try {
            bent_seed = make_polyline(D, {x, bent_mid, y});
        } catch (const Error& e) {
            if (e.code() != Errc::SegmentExitsDomain) throw;
            bent_seed = seed_path(D, x, y);
        }
        const Polyline bent = optimize_path(D, bent_seed, o.optimize).path;
        HausdorffOptions ho;
        ho.grid = o.r_grid;
        ho.distance = o.gromov.distance;
        r[i] = hausdorff_distance_kobayashi(D, detail::decimate(straight, o.r_max_vertices),
                                            detail::decimate(bent, o.r_max_vertices), ho)
                   .hi;
    }
    h.r_pairs = pairs;
    if (pairs) h.R = *std::max_element(r.begin(), r.end());
    return h;
}

} // namespace kob
