#pragma once

// Experiment plumbing: power-law envelopes, seeded pair families, config
// hashes and the ordered CSV sink.

#include <cstdio>
#include <ostream>

#include "kob/descriptor.hpp"
#include "kob/ledger.hpp"

namespace kob {

// Power-law envelope y <= c1 x^c2.

struct PowerLawFit {
    double c1_envelope = 0.0; // max y / x^c2_target
    double c2_slope = 0.0;    // least-squares slope of log y on log x
    double r2 = 0.0;
};

inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& samples, double c2_target)
{
    require(std::isfinite(c2_target), "target exponent must be finite");
    for (const auto& [x, y] : samples)
        require(x > 0.0 && y > 0.0 && std::isfinite(x) && std::isfinite(y), "power-law samples must be positive");
    if (samples.size() < 8) fail(Errc::InsufficientSpread, "power-law fit needs at least 8 samples");
    std::vector<double> lx, ly, w(samples.size(), 1.0);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    PowerLawFit f;
    for (const auto& [x, y] : samples) {
        lx.push_back(std::log(x));
        ly.push_back(std::log(y));
        lo = std::min(lo, std::log10(x));
        hi = std::max(hi, std::log10(x));
        f.c1_envelope = std::max(f.c1_envelope, y / std::pow(x, c2_target));
    }
    if (hi - lo < 2.0 - 1e-9) fail(Errc::InsufficientSpread, "power-law fit needs x spanning two decades");
    f.c2_slope = detail::ls_slope(lx, ly, w, &f.r2);
    return f;
}

// Pair families.

enum class PairLawKind { BoundaryApproach, RandomInterior, NearBoundaryPairs };

inline std::string_view pair_law_name(PairLawKind k)
{
    switch (k) {
    case PairLawKind::BoundaryApproach: return "boundary-approach";
    case PairLawKind::RandomInterior: return "random-interior";
    case PairLawKind::NearBoundaryPairs: return "near-boundary-pairs";
    }
    return "?";
}

struct PairLaw {
    PairLawKind kind = PairLawKind::RandomInterior;
    // boundary-approach: x_k = p + t_k n_p, y_k = q + t_k n_q, t_k = t0 ratio^k, k = 1..count
    std::optional<BoundaryPoint> p, q; // drawn from the seed when absent
    double t0 = 1.0, ratio = 0.5;
    // near-boundary-pairs: tangent offset log-stratified over [dmin, dmax], depths log-uniform in
    // [depth_min, min(depth_max, offset)]
    double dmin = 1e-3, dmax = 0.3;
    double depth_min = 1e-4, depth_max = 0.1;
};

struct PairSample {
    CPoint x, y;
    double delta_x = 0.0, delta_y = 0.0;
    bool case_a = true; // |x - y| >= (delta(x) delta(y))^2
};

namespace detail {

inline PairSample tag_pair(const DomainSpec& D, const CPoint& x, const CPoint& y)
{
    PairSample s{x, y, boundary_distance(D, x), boundary_distance(D, y), true};
    const double prod = s.delta_x * s.delta_y;
    s.case_a = distance(x, y) >= prod * prod;
    return s;
}

inline double log_uniform(CounterRng& rng, double lo, double hi)
{
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * rng.uniform());
}

/// Unit real direction tangent to the boundary at b.
inline CVector tangent_direction(const BoundaryPoint& b, CounterRng& rng)
{
    for (;;) {
        CVector u = rng.unit_vector(b.point.dim());
        u = u - rdot(u, b.inner_normal) * b.inner_normal;
        if (u.norm() > 1e-3) return u.normalized();
    }
}

} // namespace detail

inline std::vector<PairSample> sample_pair_family(const DomainSpec& D, const PairLaw& law, std::size_t count,
                                                  std::uint64_t seed)
{
    require(count >= 1, "pair family needs count >= 1");
    std::vector<PairSample> out(count);
    const std::uint32_t stream = stream_id(pair_law_name(law.kind));
    switch (law.kind) {
    case PairLawKind::BoundaryApproach: {
        require(law.t0 > 0.0 && law.ratio > 0.0 && law.ratio < 1.0, "boundary-approach needs t0 > 0 and ratio in (0,1)");
        CounterRng rng(seed, stream, 0);
        BoundaryPoint p = law.p ? *law.p : boundary_point_towards(D, rng.unit_vector(D.dim()));
        BoundaryPoint q = law.q ? *law.q : boundary_point_towards(D, rng.unit_vector(D.dim()));
        require(!(p.point == q.point), "boundary-approach needs distinct boundary points");
        parallel_for(count, [&](std::size_t k) {
            const double t = law.t0 * std::pow(law.ratio, static_cast<double>(k + 1));
            const CPoint x = p.point + t * p.inner_normal, y = q.point + t * q.inner_normal;
            require_inside(D, x);
            require_inside(D, y);
            out[k] = detail::tag_pair(D, x, y);
        });
        break;
    }
    case PairLawKind::RandomInterior:
        parallel_for(count, [&](std::size_t i) {
            CounterRng rng(seed, stream, i);
            CPoint x, y;
            do {
                x = sample_interior_point(D, rng);
                y = sample_interior_point(D, rng);
            } while (x == y);
            out[i] = detail::tag_pair(D, x, y);
        });
        break;
    case PairLawKind::NearBoundaryPairs:
        require(law.dmin > 0.0 && law.dmax > law.dmin, "near-boundary pairs need 0 < dmin < dmax");
        require(law.depth_min > 0.0 && law.depth_max >= law.depth_min, "near-boundary pairs need 0 < depth_min <= depth_max");
        parallel_for(count, [&](std::size_t i) {
            CounterRng rng(seed, stream, i);
            for (;;) {
                const BoundaryPoint b = boundary_point_towards(D, rng.unit_vector(D.dim()));
                // Offsets stratified over the count so every draw spans [dmin, dmax].
                const double lr = std::log(law.dmax / law.dmin);
                const double s = law.dmin * std::exp(lr * (static_cast<double>(i) + rng.uniform()) / static_cast<double>(count));
                const CPoint y0 = b.point + s * detail::tangent_direction(b, rng);
                const CVector toward = y0 - D.deep_point;
                if (toward.norm() == 0.0) continue;
                const BoundaryPoint b2 = boundary_point_towards(D, toward);
                // Depths at most the offset, else |x - y| is set by the depths.
                const double dtop = std::max(law.depth_min, std::min(law.depth_max, s));
                const double dx = detail::log_uniform(rng, law.depth_min, dtop);
                const double dy = detail::log_uniform(rng, law.depth_min, dtop);
                const CPoint x = b.point + dx * b.inner_normal, y = b2.point + dy * b2.inner_normal;
                if (!D.contains(x) || !D.contains(y) || x == y) continue;
                out[i] = detail::tag_pair(D, x, y);
                break;
            }
        });
        break;
    }
    return out;
}

// Config hash: FNV-1a 64 of the canonical config text, first 12 hex digits.

inline std::string config_hash(const std::string& canonical)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 12);
}

// CSV sink. Rows are stored by sample index, so parallel producers give the
// same file as a serial run.

inline std::string csv_num(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvTable {
public:
    CsvTable(std::vector<std::string> columns, std::string seed, std::string domain_id, std::string hash)
        : columns_(std::move(columns)), prefix_{std::move(seed), std::move(domain_id), std::move(hash)}
    {
    }

    /// Reserve n row slots; slot i is filled by set(i, ...).
    void resize(std::size_t n) { rows_.resize(n); }
    std::size_t size() const { return rows_.size(); }

    void set(std::size_t i, std::vector<std::string> cells)
    {
        require(cells.size() == columns_.size(), "CSV row has the wrong number of cells");
        rows_.at(i) = std::move(cells);
    }

    void push(std::vector<std::string> cells)
    {
        rows_.emplace_back();
        set(rows_.size() - 1, std::move(cells));
    }

    const std::vector<std::string>& columns() const { return columns_; }

    void write(std::ostream& os) const
    {
        os << "seed,domain_id,config_hash";
        for (const auto& c : columns_) os << ',' << c;
        os << '\n';
        for (const auto& r : rows_) {
            os << prefix_[0] << ',' << prefix_[1] << ',' << prefix_[2];
            for (const auto& c : r) os << ',' << c;
            os << '\n';
        }
    }

private:
    std::vector<std::string> columns_;
    std::array<std::string, 3> prefix_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace kob
