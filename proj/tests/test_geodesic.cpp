#include <gtest/gtest.h>

#include "kob/geodesic.hpp"

using namespace kob;

namespace {

const DomainSpec& disk()
{
    static const DomainSpec d = make_unit_disk();
    return d;
}

const DomainSpec& ball()
{
    static const DomainSpec d = make_unit_ball(2);
    return d;
}

// Poincare distance artanh |(a - b) / (1 - conj(a) b)|.
double disk_oracle(cplx a, cplx b) { return std::atanh(std::abs((a - b) / (1.0 - std::conj(a) * b))); }

double ball_oracle(const CPoint& x, const CPoint& y)
{
    const double c = (1.0 - x.norm2()) * (1.0 - y.norm2()) / std::norm(1.0 - hdot(x, y));
    return std::atanh(std::sqrt(1.0 - c));
}

Polyline straight(const DomainSpec& D, const CPoint& a, const CPoint& b, int pieces)
{
    std::vector<CPoint> v;
    for (int k = 0; k <= pieces; ++k) v.push_back(lerp(a, b, static_cast<double>(k) / pieces));
    return make_polyline(D, v);
}

} // namespace

TEST(SeedPath, StraightWhenConvex)
{
    EXPECT_EQ(seed_path(ball(), CPoint{0.0, 0.0}, CPoint{0.5, 0.0}).size(), 2u);
    EXPECT_EQ(seed_path(disk(), CPoint{-0.9}, CPoint{0.9}).size(), 2u);
}

TEST(SeedPath, GraphPathAvoidsTheDent)
{
    const DomainSpec dent = make_dent_preset();
    auto inner = [&](double theta) {
        const BoundaryPoint bp = boundary_point_towards(dent, CVector{std::polar(1.0, theta), 0.0});
        return dent.deep_point + 0.99 * (bp.point - dent.deep_point);
    };
    const CPoint x = inner(0.5), y = inner(-0.5);
    SeedOptions so;
    so.graph_size = 300;
    const Polyline p = seed_path(dent, x, y, so);
    EXPECT_GT(p.size(), 2u);
    EXPECT_EQ(p.front(), x);
    EXPECT_EQ(p.back(), y);
    // Membership oracle on a dense sample of every segment.
    for (std::size_t i = 1; i < p.size(); ++i)
        for (int k = 0; k <= 100; ++k) EXPECT_LT(dent.rho->value(lerp(p.vertices[i - 1], p.vertices[i], k / 100.0)), 0.0);
}

TEST(OptimizePath, DiskDiameterIsStationary)
{
    const Polyline seed = make_polyline(disk(), {CPoint{-0.9}, CPoint{0.9}});
    const OptimizeResult r = optimize_path(disk(), seed);
    for (const CPoint& v : r.path.vertices) EXPECT_NEAR(v[0].imag(), 0.0, 1e-6);
    EXPECT_NEAR(r.length.hi, 2 * std::atanh(0.9), 1e-6);
    EXPECT_LE(r.length.hi, kobayashi_length_interval(disk(), seed).hi + 1e-12);
}

TEST(OptimizePath, DiskOffDiagonalPairApproachesOracle)
{
    const cplx x = 0.9, y = cplx(0, 0.9);
    const double oracle = disk_oracle(x, y);
    const OptimizeResult r = optimize_path(disk(), make_polyline(disk(), {CPoint{x}, CPoint{y}}));
    EXPECT_LT(std::abs(r.length.hi / oracle - 1.0), 0.01);
    EXPECT_GE(r.length.hi, oracle * (1 - 1e-9));
    EXPECT_FALSE(r.budget_exhausted);
    // The orthocircular arc bends towards the origin.
    EXPECT_LT(r.path.vertices[r.path.size() / 2][0].real(), 0.9 / 2);
}

TEST(OptimizePath, BallRadialAndRandomPairs)
{
    const OptimizeResult r = optimize_path(ball(), make_polyline(ball(), {CPoint{0.0, 0.0}, CPoint{0.5, 0.0}}));
    EXPECT_NEAR(r.length.hi, std::atanh(0.5), 1e-7);
    CounterRng rng(4, 0, 0);
    for (int i = 0; i < 10; ++i) {
        const CPoint a = sample_interior_point(ball(), rng), b = sample_interior_point(ball(), rng);
        const double o = ball_oracle(a, b);
        if (o > 5) continue;
        const OptimizeResult q = optimize_path(ball(), seed_path(ball(), a, b));
        EXPECT_LT(q.length.hi / o - 1.0, 0.02);
        EXPECT_GE(q.length.hi / o - 1.0, -1e-9);
    }
}

TEST(DistanceBound, BallExamples)
{
    const DistanceBound b = distance_bound(ball(), CPoint{0.0, 0.0}, CPoint{0.5, 0.0});
    EXPECT_TRUE(b.value.contains(0.5493061, 1e-7));
    ASSERT_TRUE(b.upper_witness.has_value());
    EXPECT_EQ(b.upper_witness->front(), (CPoint{0.0, 0.0}));
    EXPECT_EQ(b.upper_witness->back(), (CPoint{0.5, 0.0}));

    const DistanceBound z = distance_bound(ball(), CPoint{0.3, 0.1}, CPoint{0.3, 0.1});
    EXPECT_EQ(z.value.lo, 0.0);
    EXPECT_EQ(z.value.hi, 0.0);

    // Lower bound from the tangent hyperplane at (1, 0), without the exact oracle.
    DistanceOptions o;
    o.upper = UpperPath::Straight;
    o.optimize.metric.use_exact = false;
    const DistanceBound h = distance_bound(ball(), CPoint{0.9, 0.0}, CPoint{-0.9, 0.0}, o);
    EXPECT_GE(h.value.lo, 0.5 * std::log(1.9 / 0.1) - 1e-12);
    EXPECT_EQ(h.lower_witness, LowerWitness::Hyperplane);
}

TEST(DistanceBound, ContainsOracleOnRandomBallPairs)
{
    DistanceOptions o;
    o.upper = UpperPath::Straight;
    CounterRng rng(5, 0, 0);
    for (int i = 0; i < 1000; ++i) {
        const CPoint a = sample_interior_point(ball(), rng), b = sample_interior_point(ball(), rng);
        const DistanceBound d = distance_bound(ball(), a, b, o);
        const double e = ball_oracle(a, b);
        EXPECT_TRUE(d.value.contains(e, 1e-9 * (1 + e))) << d.value << " vs " << e;
    }
    // Sandwich-only bounds still contain the oracle.
    o.optimize.metric.use_exact = false;
    for (int i = 0; i < 100; ++i) {
        const CPoint a = sample_interior_point(ball(), rng), b = sample_interior_point(ball(), rng);
        const DistanceBound d = distance_bound(ball(), a, b, o);
        EXPECT_TRUE(d.value.contains(ball_oracle(a, b), 1e-9)) << d.value;
    }
}

TEST(DistanceBound, SymmetricAndTriangle)
{
    const CPoint x{cplx(0.6, 0.1), 0.2}, y{cplx(-0.2, 0.5), cplx(0.1, -0.4)}, z{0.0, cplx(0.0, 0.8)};
    DistanceOptions o;
    o.nikolov_A = 1e9; // keep the path bound active
    const DistanceBound xy = distance_bound(ball(), x, y, o), yx = distance_bound(ball(), y, x, o);
    EXPECT_NEAR(xy.value.hi, yx.value.hi, 1e-6);
    const DistanceBound yz = distance_bound(ball(), y, z, o);
    ASSERT_TRUE(xy.upper_witness && yz.upper_witness);
    std::vector<CPoint> cat = xy.upper_witness->vertices;
    cat.insert(cat.end(), yz.upper_witness->vertices.begin() + 1, yz.upper_witness->vertices.end());
    o.seed = make_polyline(ball(), cat);
    const DistanceBound xz = distance_bound(ball(), x, z, o);
    EXPECT_LE(xz.value.hi, xy.value.hi + yz.value.hi + 1e-6);
}

TEST(DistanceBound, InconsistentConstantsReported)
{
    DistanceOptions o;
    o.upper = UpperPath::None;
    o.nikolov_A = 1e-6;
    try {
        distance_bound(ball(), CPoint{0.0, 0.0}, CPoint{0.5, 0.0}, o);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InconsistentBounds);
    }
}

TEST(NikolovEstimate, DiskAndBall)
{
    const NikolovEstimate d = nikolov_constant_estimate(disk(), 1000, 1);
    EXPECT_TRUE(std::isfinite(d.A_hat));
    EXPECT_GE(d.A_hat, 1.0);
    EXPECT_FALSE(d.x == d.y);
    const double a1 = nikolov_constant_estimate(ball(), 1000, 1).A_hat;
    const double a2 = nikolov_constant_estimate(ball(), 1000, 2).A_hat;
    EXPECT_LT(std::abs(a1 / a2 - 1.0), 0.15);
    EXPECT_LE(std::max(a1, a2), ball().nikolov_A);
}

TEST(Certify, ExactGeodesicsCertifyAtLambdaOne)
{
    const Polyline d = optimize_path(disk(), make_polyline(disk(), {CPoint{-0.9}, CPoint{0.9}})).path;
    const GeodesicCertificate c = certify_quasigeodesic(disk(), d, 200, 1);
    EXPECT_EQ(c.lambda, 1.0);
    EXPECT_LE(c.kappa, 0.1);
    EXPECT_EQ(c.sample_count, 200u);
    const Polyline r = optimize_path(ball(), make_polyline(ball(), {CPoint{-0.8, 0.0}, CPoint{0.95, 0.0}})).path;
    const GeodesicCertificate cb = certify_quasigeodesic(ball(), r, 200, 2);
    EXPECT_EQ(cb.lambda, 1.0);
    EXPECT_LE(cb.kappa, 0.1);
}

TEST(Certify, SandwichOnlyRadialPathWithinFactorTwo)
{
    CertifyOptions o;
    o.distance.optimize.metric.use_exact = false;
    const Polyline r = straight(ball(), CPoint{0.0, 0.0}, CPoint{0.95, 0.0}, 32);
    const GeodesicCertificate c = certify_quasigeodesic(ball(), r, 200, 3, o);
    EXPECT_LE(c.lambda, 2.0);
    EXPECT_LE(c.kappa, 2.0);
}

TEST(Certify, RejectsWhenNothingOnTheGrid)
{
    CertifyOptions o;
    o.lambda_max = 1.0;
    o.kappa_max = 0.0;
    o.distance.optimize.metric.use_exact = false;
    const Polyline r = straight(ball(), CPoint{0.0, 0.0}, CPoint{0.95, 0.0}, 32);
    EXPECT_THROW(certify_quasigeodesic(ball(), r, 50, 3, o), Error);
}

TEST(Dyadic, ConstantDeltaArcHasOneMiddlePiece)
{
    std::vector<CPoint> arc;
    for (int k = 0; k <= 8; ++k) arc.push_back(CPoint{std::polar(0.5, 0.05 * k)});
    const DyadicDecomposition d = dyadic_decomposition(disk(), make_polyline(disk(), arc));
    EXPECT_EQ(d.N1, 0);
    EXPECT_EQ(d.N2, 0);
    EXPECT_EQ(d.nondegenerate(), 1u);
    EXPECT_TRUE(d.invariants_hold);
}

TEST(Dyadic, DiskDiameter)
{
    const DyadicDecomposition d = dyadic_decomposition(disk(), straight(disk(), CPoint{-0.999}, CPoint{0.999}, 256));
    EXPECT_NEAR(d.D_max, 1.0, 1e-15);
    const int expected = static_cast<int>(std::floor(std::log2(1.0 / 0.001)));
    EXPECT_EQ(d.N1, expected);
    EXPECT_EQ(d.N2, expected);
    EXPECT_EQ(d.pieces.size(), static_cast<std::size_t>(2 * expected + 3));
    EXPECT_TRUE(d.invariants_hold);
    // Crossing points sit at delta = 2^-k, i.e. |t| = 1 - 2^-k.
    EXPECT_NEAR(d.pieces[1].points.front()[0].real(), -(1.0 - std::ldexp(1.0, -expected)), 1e-12);
}

TEST(Dyadic, HalvingEndpointDeltaAddsOnePiece)
{
    for (int j = 2; j < 12; ++j) {
        const double d1 = std::ldexp(1.0, -j) * 1.5;
        const auto a = dyadic_decomposition(disk(), straight(disk(), CPoint{-(1.0 - d1)}, CPoint{0.5}, 64));
        const auto b = dyadic_decomposition(disk(), straight(disk(), CPoint{-(1.0 - d1 / 2)}, CPoint{0.5}, 64));
        EXPECT_EQ(b.N1, a.N1 + 1);
        EXPECT_EQ(b.N2, a.N2);
        EXPECT_EQ(b.pieces.size(), a.pieces.size() + 1);
    }
}

TEST(Dyadic, InvariantsOnOptimizedBallGeodesics)
{
    CounterRng rng(8, 0, 0);
    for (int i = 0; i < 5; ++i) {
        const CPoint a = sample_interior_point(ball(), rng, SampleLaw::NearBoundary);
        const CPoint b = sample_interior_point(ball(), rng, SampleLaw::NearBoundary);
        OptimizeOptions oo;
        oo.vertex_budget = 65;
        const Polyline p = optimize_path(ball(), seed_path(ball(), a, b), oo).path;
        const DyadicDecomposition d = dyadic_decomposition(ball(), p);
        EXPECT_TRUE(d.invariants_hold);
        EXPECT_EQ(d.pieces.size(), static_cast<std::size_t>(d.N1 + d.N2 + 3));
        for (const DyadicPiece& piece : d.pieces) {
            const int k = std::abs(piece.nu);
            for (std::size_t j = 1; j + 1 < piece.points.size(); ++j)
                EXPECT_LE(boundary_distance(ball(), piece.points[j]), std::ldexp(d.D_max, 1 - k) * (1 + 1e-12));
        }
    }
}

TEST(GehringHayman, DiskDiameterRecord)
{
    const CPoint x{-0.9}, y{0.9};
    const Polyline g = optimize_path(disk(), make_polyline(disk(), {x, y})).path;
    const GeodesicCertificate c = certify_quasigeodesic(disk(), g, 50, 1);
    const GHRecord r = gehring_hayman_record(disk(), x, y, g, kPi / 2, 1.0, c);
    EXPECT_NEAR(r.euclid, 1.8, 1e-15);
    EXPECT_NEAR(r.l_d, 1.8, 1e-6);
    EXPECT_NEAR(r.residual, (kPi / 2 - 1) * 1.8, 1e-6);
    EXPECT_THROW(gehring_hayman_record(disk(), x, x, g, 1, 1, c), Error);
}

TEST(GehringHayman, HoldsOnRandomDiskPairs)
{
    CounterRng rng(9, 0, 0);
    for (int i = 0; i < 20; ++i) {
        const CPoint x = sample_interior_point(disk(), rng), y = sample_interior_point(disk(), rng);
        const Polyline g = optimize_path(disk(), make_polyline(disk(), {x, y})).path;
        EXPECT_LE(euclidean_length(g), kPi / 2 * distance(x, y) + 1e-6);
    }
}

TEST(Separation, DiskDiameterArithmetic)
{
    const Polyline g = straight(disk(), CPoint{-0.9}, CPoint{0.9}, 2);
    const double alpha = 4.5;
    const auto recs = separation_record(disk(), g, 1.0 / std::pow(0.9, alpha), alpha);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_NEAR(recs[0].delta, 1.0, 1e-15);
    EXPECT_NEAR(recs[0].min_arm, 0.9, 1e-15);
    EXPECT_GE(recs[0].residual, -1e-12);
    EXPECT_NEAR(max_feasible_ctilde(recs, alpha), 1.0 / std::pow(0.9, alpha), 1e-12);
    // A vertex next to an endpoint has a vanishing arm.
    const auto near = separation_record(disk(), make_polyline(disk(), {CPoint{-0.9}, CPoint{-0.9 + 1e-9}, CPoint{0.9}}),
                                        1e6, 2.0);
    EXPECT_GT(near[0].residual, 0.0);
}

TEST(Hausdorff, IdenticalAndPerturbed)
{
    const Polyline d = straight(disk(), CPoint{-0.9}, CPoint{0.9}, 2);
    const Interval same = hausdorff_distance_kobayashi(disk(), d, d);
    EXPECT_EQ(same.lo, 0.0);
    EXPECT_LE(same.hi, 1e-12);

    const Polyline bent = make_polyline(disk(), {CPoint{-0.9}, CPoint{cplx(0, 0.1)}, CPoint{0.9}});
    const Interval h = hausdorff_distance_kobayashi(disk(), d, bent);
    // Oracle: distance from 0.1i to the real segment, minimized over a fine grid.
    double oracle = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 18000; ++k) oracle = std::min(oracle, disk_oracle(cplx(0, 0.1), -0.9 + 1.8 * k / 18000.0));
    EXPECT_TRUE(h.contains(oracle, 1e-9)) << h << " vs " << oracle;
}

TEST(Hausdorff, GraphSeedShrinksAfterOptimization)
{
    const CPoint a{-0.7, 0.0}, b{0.7, 0.0};
    SeedOptions so;
    so.force_graph = true;
    so.graph_size = 200;
    const Polyline seed = seed_path(ball(), a, b, so);
    const Polyline radial = straight(ball(), a, b, 8);
    HausdorffOptions ho;
    ho.grid = 2;
    const Interval before = hausdorff_distance_kobayashi(ball(), radial, seed, ho);
    OptimizeOptions oo;
    oo.vertex_budget = 33;
    const Polyline after = optimize_path(ball(), seed, oo).path;
    const Interval h = hausdorff_distance_kobayashi(ball(), radial, after, ho);
    EXPECT_TRUE(std::isfinite(before.hi));
    EXPECT_LT(h.hi, before.hi);
}
