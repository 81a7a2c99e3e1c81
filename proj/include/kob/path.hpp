#pragma once

// Geodesic candidates: straight or graph-based seeds, then multilevel
// coordinate descent on the certified upper length.

#include <algorithm>
#include <cassert>
#include <limits>
#include <queue>

#include "kob/metric.hpp"
#include "kob/parallel.hpp"
#include "kob/rng.hpp"

namespace kob {

struct SeedOptions {
    std::size_t graph_size = 400;
    std::size_t neighbours = 10;
    std::uint64_t seed = 0;
    int edge_quadrature_order = 4;
    bool force_graph = false;
};

namespace detail {

inline double radical_inverse(std::uint64_t i, std::uint64_t base)
{
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

/// True when `samples` equally spaced points of [a, b] are strictly inside.
inline bool segment_inside(const DomainSpec& D, const CPoint& a, const CPoint& b, int samples)
{
    const double tol = D.boundary_tolerance();
    for (int k = 0; k <= samples; ++k)
        if (D.level(lerp(a, b, static_cast<double>(k) / samples)) >= -tol) return false;
    return true;
}

/// Rotated Halton points of the bounding box that lie in the domain.
inline std::vector<CPoint> halton_interior(const DomainSpec& D, std::size_t count, std::uint64_t seed)
{
    static constexpr std::uint64_t primes[8] = {2, 3, 5, 7, 11, 13, 17, 19};
    const std::size_t dims = 2 * D.dim();
    CounterRng rng(seed, stream_id("halton"), 0);
    std::vector<double> shift(dims);
    for (double& s : shift) s = rng.uniform();
    const double R = D.bounding_radius;
    std::vector<CPoint> out;
    for (std::uint64_t i = 1; out.size() < count && i < 200 * count + 1000; ++i) {
        CPoint p(D.dim());
        for (std::size_t k = 0; k < dims; ++k) {
            double u = radical_inverse(i, primes[k]) + shift[k];
            if (u >= 1.0) u -= 1.0;
            p.set_real_coord(k, R * (2.0 * u - 1.0));
        }
        if (D.level(p) < -D.boundary_tolerance()) out.push_back(p);
    }
    return out;
}

} // namespace detail

/// Straight segment when it stays inside, else a shortest path in a k-nearest-
/// neighbour graph over quasi-random interior points weighted by hi-length.
inline Polyline seed_path(const DomainSpec& D, const CPoint& x, const CPoint& y, const SeedOptions& opts = {})
{
    require_inside(D, x);
    require_inside(D, y);
    require(!(x == y), "seed_path needs distinct endpoints");
    if (!opts.force_graph && detail::segment_inside(D, x, y, 64)) return make_polyline(D, {x, y});

    std::vector<CPoint> nodes = detail::halton_interior(D, opts.graph_size, opts.seed);
    const std::size_t m = nodes.size();
    nodes.push_back(x);
    nodes.push_back(y);
    const std::size_t N = nodes.size(), src = m, dst = m + 1;

    MetricOptions mo;
    mo.quadrature_order = opts.edge_quadrature_order;
    auto edge_weight = [&](std::size_t a, std::size_t b) -> double {
        if (!detail::segment_inside(D, nodes[a], nodes[b], 16)) return -1.0;
        try {
            return segment_length_fixed(D, nodes[a], nodes[b], mo, opts.edge_quadrature_order).hi;
        } catch (const Error& e) {
            if (e.code() == Errc::SegmentExitsDomain) return -1.0;
            throw;
        }
    };

    std::vector<std::vector<std::pair<std::size_t, double>>> adj(N);
    std::vector<std::vector<std::pair<std::size_t, double>>> edges(N);
    parallel_for(N, [&](std::size_t a) {
        std::vector<std::pair<double, std::size_t>> near;
        for (std::size_t b = 0; b < m; ++b)
            if (b != a) near.emplace_back(distance(nodes[a], nodes[b]), b);
        const std::size_t k = std::min(opts.neighbours, near.size());
        std::partial_sort(near.begin(), near.begin() + k, near.end());
        for (std::size_t j = 0; j < k; ++j) {
            const double w = edge_weight(a, near[j].second);
            if (w >= 0.0) edges[a].emplace_back(near[j].second, w);
        }
    });
    for (std::size_t a = 0; a < N; ++a)
        for (auto [b, w] : edges[a]) {
            adj[a].emplace_back(b, w);
            adj[b].emplace_back(a, w);
        }

    std::vector<double> dist(N, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> prev(N, N);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.emplace(0.0, src);
    while (!pq.empty()) {
        auto [d, a] = pq.top();
        pq.pop();
        if (d > dist[a]) continue;
        if (a == dst) break;
        for (auto [b, w] : adj[a])
            if (d + w < dist[b]) {
                dist[b] = d + w;
                prev[b] = a;
                pq.emplace(dist[b], b);
            }
    }
    if (!std::isfinite(dist[dst]))
        fail(Errc::GraphDisconnected, "no graph path between the endpoints; increase graph_size");
    std::vector<CPoint> verts;
    for (std::size_t a = dst; a != N; a = prev[a]) verts.push_back(nodes[a]);
    std::reverse(verts.begin(), verts.end());
    return make_polyline(D, verts);
}

struct OptimizeOptions {
    int max_iter = 1000;         // sweeps per level
    std::size_t vertex_budget = 257;
    double tol = 1e-7;           // final stationarity step
    double coarse_tol = 1e-3;    // relative to the shortest segment, coarse levels
    int quadrature_order = 8;
    MetricOptions metric{};
};

struct OptimizeResult {
    Polyline path;
    Interval length;             // adaptive length bracket of `path`
    bool budget_exhausted = false;
    int sweeps = 0;
};

namespace detail {

inline Polyline refine_midpoints(const Polyline& p)
{
    Polyline q;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i > 0) q.vertices.push_back(midpoint(p.vertices[i - 1], p.vertices[i]));
        q.vertices.push_back(p.vertices[i]);
    }
    return q;
}

/// Hi-length of [a, b] with the adaptive rule, or +inf when the segment is not
/// admissible. A fixed rule underestimates segments whose depth ratio is large,
/// and the descent would exploit that error.
inline double trial_segment(const DomainSpec& D, const CPoint& a, const CPoint& b, const OptimizeOptions& o)
{
    if (a == b) return std::numeric_limits<double>::infinity();
    if (!D.contains(midpoint(a, b))) return std::numeric_limits<double>::infinity();
    try {
        MetricOptions m = o.metric;
        m.quadrature_order = o.quadrature_order;
        return segment_length(D, a, b, m).hi;
    } catch (const Error& e) {
        if (e.code() == Errc::SegmentExitsDomain) return std::numeric_limits<double>::infinity();
        throw;
    }
}

/// Coordinate descent over interior vertices; returns true when it stopped on
/// the step tolerance rather than the sweep budget.
inline bool descend(const DomainSpec& D, std::vector<CPoint>& v, const OptimizeOptions& o, double tol, int& sweeps)
{
    const std::size_t n = v.size(), dims = 2 * D.dim();
    std::vector<double> seg(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) seg[i] = trial_segment(D, v[i], v[i + 1], o);
    std::vector<std::vector<double>> step(n, std::vector<double>(dims, 0.0));
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double s = 0.25 * std::min(distance(v[i - 1], v[i]), distance(v[i], v[i + 1]));
        std::fill(step[i].begin(), step[i].end(), s);
    }
    [[maybe_unused]] double objective = 0.0;
    for (double s : seg) objective += s;
    for (int sweep = 0; sweep < o.max_iter; ++sweep) {
        ++sweeps;
        bool active = false;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            for (std::size_t c = 0; c < dims; ++c) {
                double& h = step[i][c];
                if (h < tol) continue;
                active = true;
                const double base = seg[i - 1] + seg[i];
                bool accepted = false;
                for (double sign : {1.0, -1.0}) {
                    CPoint t = v[i];
                    t.set_real_coord(c, t.real_coord(c) + sign * h);
                    if (!D.contains(t)) continue;
                    const double l1 = trial_segment(D, v[i - 1], t, o);
                    if (!(l1 < base)) continue;
                    const double l2 = trial_segment(D, t, v[i + 1], o);
                    if (l1 + l2 < base) {
                        v[i] = t;
                        seg[i - 1] = l1;
                        seg[i] = l2;
                        accepted = true;
                        break;
                    }
                }
                if (!accepted) h *= 0.5;
            }
        }
#ifndef NDEBUG
        double now = 0.0;
        for (double s : seg) now += s;
        assert(now <= objective);
        objective = now;
#endif
        if (!active) return true;
    }
    return false;
}

} // namespace detail

/// Multilevel optimization: descend, double the vertices by midpoint insertion,
/// repeat up to the vertex budget. Never returns a path longer than the seed.
inline OptimizeResult optimize_path(const DomainSpec& D, const Polyline& seed, const OptimizeOptions& o = {})
{
    validate(D, seed);
    require(o.vertex_budget >= 2 && o.tol > 0.0 && o.max_iter >= 1, "invalid optimize_path options");
    OptimizeResult out;
    std::vector<CPoint> v = seed.vertices;
    if (v.size() == 2 && o.vertex_budget >= 3) v = detail::refine_midpoints(Polyline{v}).vertices;
    for (;;) {
        const bool last = 2 * v.size() - 1 > o.vertex_budget;
        double tol = o.tol;
        if (!last) {
            double shortest = std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i < v.size(); ++i) shortest = std::min(shortest, distance(v[i - 1], v[i]));
            tol = std::max(o.tol, o.coarse_tol * shortest);
        }
        const bool converged = v.size() <= 2 || detail::descend(D, v, o, tol, out.sweeps);
        if (last) {
            out.budget_exhausted = !converged;
            break;
        }
        v = detail::refine_midpoints(Polyline{v}).vertices;
    }
    Polyline result;
    for (const CPoint& p : v)
        if (result.vertices.empty() || !(result.vertices.back() == p)) result.vertices.push_back(p);
    out.path = result;
    out.length = kobayashi_length_interval(D, result, o.metric);
    const Interval seed_len = kobayashi_length_interval(D, seed, o.metric);
    if (seed_len.hi < out.length.hi) {
        out.path = seed;
        out.length = seed_len;
    }
    return out;
}

} // namespace kob
