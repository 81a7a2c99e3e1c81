#include <gtest/gtest.h>

#include "kob/domain.hpp"

using namespace kob;

namespace {

const DomainSpec& ball() { static const DomainSpec d = make_unit_ball(2); return d; }
const DomainSpec& disk() { static const DomainSpec d = make_unit_disk(); return d; }
const DomainSpec& ell2() { static const DomainSpec d = make_ellipsoid(2); return d; }
const DomainSpec& ell1() { static const DomainSpec d = make_ellipsoid(1); return d; }
const DomainSpec& spsc() { static const DomainSpec d = make_spsc_preset(); return d; }
const DomainSpec& dent() { static const DomainSpec d = make_dent_preset(); return d; }

// Nearest boundary point of |z1|^2 + |z2|^(2m) = 1 by a dense sweep of the
// radius b = |xi_2| (phases align with z), then golden-section refinement.
struct SweepResult {
    double dist;
    CPoint point;
};

SweepResult ellipsoid_sweep(int m, const CPoint& z)
{
    const double r1 = std::abs(z[0]), r2 = std::abs(z[1]);
    auto g = [&](double b) {
        const double a = std::sqrt(std::max(0.0, 1.0 - std::pow(b, 2 * m)));
        return (a - r1) * (a - r1) + (b - r2) * (b - r2);
    };
    const int n = 100000;
    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (g(double(i) / n) < g(double(best) / n)) best = i;
    double lo = std::max(0.0, (best - 1.0) / n), hi = std::min(1.0, (best + 1.0) / n);
    for (int it = 0; it < 200; ++it) {
        const double c = lo + (hi - lo) * 0.381966, d = hi - (hi - lo) * 0.381966;
        if (g(c) < g(d))
            hi = d;
        else
            lo = c;
    }
    const double b = 0.5 * (lo + hi);
    const double a = std::sqrt(std::max(0.0, 1.0 - std::pow(b, 2 * m)));
    const cplx u1 = r1 > 0 ? z[0] / r1 : cplx(1.0), u2 = r2 > 0 ? z[1] / r2 : cplx(1.0);
    return {std::sqrt(g(b)), CPoint{a * u1, b * u2}};
}

CPoint random_interior(const DomainSpec& D, CounterRng& rng)
{
    for (;;) {
        const CPoint z = rng.in_unit_ball(D.dim());
        if (D.contains(z)) return z;
    }
}

} // namespace

TEST(DefiningFunction, RealGradientAndHessianMatchFiniteDifferences)
{
    const std::vector<std::shared_ptr<const DefiningFunction>> fs = {
        std::make_shared<PerturbedSphere>(2), std::make_shared<PerturbedSphere>(2, 0.1, 3),
        std::make_shared<EllipsoidFunction>(2), std::make_shared<EllipsoidFunction>(3),
        std::make_shared<ExpressionFunction>("abs2(z1)^2 + re(z1*conj(z2)^2) + abs2(z2) - 1", 2)};
    const CPoint z{cplx(0.31, -0.22), cplx(0.17, 0.41)};
    const double h = 1e-5;
    for (const auto& f : fs) {
        const Eigen::VectorXd g = to_real(real_gradient(*f, z));
        const Eigen::MatrixXd H = real_hessian(*f, z);
        for (std::size_t k = 0; k < 4; ++k) {
            CPoint p = z, m = z;
            p.set_real_coord(k, z.real_coord(k) + h);
            m.set_real_coord(k, z.real_coord(k) - h);
            EXPECT_NEAR(g(k), (f->value(p) - f->value(m)) / (2 * h), 1e-8) << f->formula();
            const Eigen::VectorXd gd = (to_real(real_gradient(*f, p)) - to_real(real_gradient(*f, m))) / (2 * h);
            for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(H(j, k), gd(j), 1e-7) << f->formula();
        }
    }
}

TEST(BoundaryDistance, BallExamples)
{
    EXPECT_DOUBLE_EQ(boundary_distance(ball(), CPoint::origin(2)), 1.0);
    EXPECT_DOUBLE_EQ(boundary_distance(ball(), CPoint{0.5, 0.0}), 0.5);
    CounterRng rng(1, 0, 0);
    for (int i = 0; i < 100; ++i) {
        const CPoint z = rng.in_unit_ball(2);
        EXPECT_NEAR(boundary_distance(ball(), z), 1.0 - z.norm(), 1e-12);
    }
}

TEST(BoundaryDistance, EllipsoidAgreesWithSweepOracle)
{
    for (const CPoint& z : {CPoint{0.0, 0.5}, CPoint{0.6, 0.3}, CPoint{cplx(0.2, 0.1), cplx(0.0, -0.7)},
                            CPoint{0.9, 0.2}, CPoint{cplx(0.0, 0.5), 0.8}}) {
        const SweepResult o = ellipsoid_sweep(2, z);
        EXPECT_NEAR(boundary_distance(ell2(), z), o.dist, 1e-6);
        const BoundaryPoint bp = boundary_projection(ell2(), z);
        EXPECT_NEAR(distance(bp.point, o.point), 0.0, 1e-5);
        EXPECT_NEAR(distance(bp.point, z), boundary_distance(ell2(), z), 1e-9);
        EXPECT_LE(std::abs(ell2().rho->value(bp.point)), ell2().boundary_tolerance());
    }
}

TEST(BoundaryDistance, OutsideRejected)
{
    try {
        boundary_distance(ball(), CPoint{1.0, 0.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::PointOutsideDomain);
    }
    EXPECT_THROW(boundary_distance(ell2(), CPoint{0.0, 1.1}), Error);
}

TEST(DirectionalDistance, Examples)
{
    EXPECT_NEAR(directional_boundary_distance(ball(), CPoint::origin(2), CVector{1.0, 0.0}), 1.0, 1e-15);
    EXPECT_NEAR(directional_boundary_distance(ball(), CPoint{0.5, 0.0}, CVector{0.0, 1.0}), std::sqrt(0.75), 1e-15);
    EXPECT_NEAR(directional_boundary_distance(ell2(), CPoint{0.0, 0.5}, CVector{1.0, 0.0}), std::sqrt(1.0 - 0.0625),
                1e-9);
    EXPECT_THROW(directional_boundary_distance(ball(), CPoint::origin(2), CVector(2)), Error);
}

TEST(DirectionalDistance, GenericSearchMatchesBallClosedForm)
{
    // The generic lambda-plane search run on the ball's defining function.
    CounterRng rng(2, 0, 0);
    for (int i = 0; i < 200; ++i) {
        const CPoint z = rng.in_unit_ball(2);
        const CVector v = rng.unit_vector(2);
        EXPECT_NEAR(detail::directional_search(ball(), z, v), directional_boundary_distance(ball(), z, v), 1e-10);
    }
}

TEST(DirectionalDistance, NeverBelowBoundaryDistance)
{
    CounterRng rng(3, 0, 0);
    for (const DomainSpec* D : {&ball(), &ell2()})
        for (int i = 0; i < 200; ++i) {
            const CPoint z = random_interior(*D, rng);
            const CVector v = rng.unit_vector(2);
            EXPECT_GE(directional_boundary_distance(*D, z, v), boundary_distance(*D, z) - 1e-9);
        }
}

TEST(Projection, Examples)
{
    const BoundaryPoint b = boundary_projection(ball(), CPoint{0.5, 0.0});
    EXPECT_NEAR(distance(b.point, CPoint{1.0, 0.0}), 0.0, 1e-15);
    EXPECT_NEAR((b.inner_normal - CVector{-1.0, 0.0}).norm(), 0.0, 1e-15);
    const BoundaryPoint d = boundary_projection(disk(), CPoint{cplx(0, 0.9)});
    EXPECT_NEAR(distance(d.point, CPoint{cplx(0, 1)}), 0.0, 1e-15);
    EXPECT_NEAR((d.inner_normal - CVector{cplx(0, -1)}).norm(), 0.0, 1e-15);
}

TEST(Projection, AmbiguousAtSymmetryCenters)
{
    for (const DomainSpec* D : {&ball(), &ell2()}) {
        try {
            boundary_projection(*D, CPoint::origin(2));
            FAIL() << D->id;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::ProjectionAmbiguous) << e.what();
        }
    }
}

TEST(Projection, InnerNormalPointsInside)
{
    CounterRng rng(4, 0, 0);
    for (const DomainSpec* D : {&ell2(), &spsc(), &dent()})
        for (int i = 0; i < 50; ++i) {
            const CVector u = rng.unit_vector(2);
            const CPoint z = D->deep_point + 0.9 * (boundary_point_towards(*D, u).point - D->deep_point);
            const BoundaryPoint bp = boundary_projection(*D, z);
            EXPECT_NEAR(bp.inner_normal.norm(), 1.0, 1e-14);
            EXPECT_LT(D->rho->value(bp.point + 1e-6 * bp.inner_normal), 0.0);
            EXPECT_NEAR(distance(bp.point, z), boundary_distance(*D, z), 1e-9);
        }
}

TEST(Ellipsoid, ExponentOneCoincidesWithBall)
{
    CounterRng rng(5, 0, 0);
    for (int i = 0; i < 1000; ++i) {
        const CPoint z = rng.in_unit_ball(2);
        const CVector v = rng.unit_vector(2);
        ASSERT_NEAR(ell1().rho->value(z), ball().rho->value(z), 1e-15);
        EXPECT_NEAR(boundary_distance(ell1(), z), boundary_distance(ball(), z), 1e-10);
        EXPECT_NEAR(directional_boundary_distance(ell1(), z, v), directional_boundary_distance(ball(), z, v), 1e-10);
        if (z.norm() > 1e-3) {
            const BoundaryPoint a = boundary_projection(ell1(), z), b = boundary_projection(ball(), z);
            EXPECT_NEAR(distance(a.point, b.point), 0.0, 1e-10);
            EXPECT_NEAR((a.inner_normal - b.inner_normal).norm(), 0.0, 1e-10);
        }
    }
}

TEST(LeviForm, Examples)
{
    const BoundaryPoint p = boundary_projection(ball(), CPoint{0.5, 0.0});
    CounterRng rng(6, 0, 0);
    for (int i = 0; i < 20; ++i) {
        const CVector v = 3.0 * rng.unit_vector(2);
        EXPECT_NEAR(levi_form(ball(), p, v), v.norm2(), 1e-13);
        const cplx a(0.3, -1.7);
        EXPECT_NEAR(levi_form(ell2(), p, a * v), std::norm(a) * levi_form(ell2(), p, v), 1e-12);
    }
    EXPECT_EQ(levi_form(ball(), p, CVector(2)), 0.0);
    const BoundaryPoint q{CPoint{1.0, 0.0}, CVector{-1.0, 0.0}, CPoint{0.5, 0.0}};
    EXPECT_EQ(levi_form(ell2(), q, CVector{0.0, 1.0}), 0.0);
}

TEST(NormalTangential, Examples)
{
    const CPoint z{0.5, 0.0};
    auto s = normal_tangential_split(ball(), z, CVector{1.0, 0.0});
    EXPECT_NEAR((s.normal - CVector{1.0, 0.0}).norm(), 0.0, 1e-15);
    EXPECT_NEAR(s.tangential.norm(), 0.0, 1e-15);
    s = normal_tangential_split(ball(), z, CVector{0.0, 1.0});
    EXPECT_NEAR(s.normal.norm(), 0.0, 1e-15);
    EXPECT_NEAR((s.tangential - CVector{0.0, 1.0}).norm(), 0.0, 1e-15);
    s = normal_tangential_split(ball(), z, (1.0 / std::sqrt(2.0)) * CVector{1.0, 1.0});
    EXPECT_NEAR(s.normal.norm(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s.tangential.norm(), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(NormalTangential, ReconstructionAndTangency)
{
    CounterRng rng(7, 0, 0);
    for (const DomainSpec* D : {&ball(), &ell2(), &spsc()})
        for (int i = 0; i < 50; ++i) {
            const CVector u = rng.unit_vector(2);
            const CPoint z = D->deep_point + 0.95 * (boundary_point_towards(*D, u).point - D->deep_point);
            const CVector v = rng.unit_vector(2);
            const BoundaryPoint bp = boundary_projection(*D, z);
            const auto s = normal_tangential_split(*D, bp, v);
            EXPECT_LE((s.normal + s.tangential - v).norm(), 1e-12);
            const CVector d = D->rho->dz(bp.point);
            cplx pairing = 0.0;
            for (std::size_t k = 0; k < 2; ++k) pairing += d[k] * s.tangential[k];
            EXPECT_LE(std::abs(pairing), 1e-10);
        }
}

TEST(SupportingHyperplane, Examples)
{
    const BoundaryPoint p{CPoint{1.0, 0.0}, CVector{-1.0, 0.0}, CPoint{0.5, 0.0}};
    const Hyperplane h = verified_supporting_hyperplane(ball(), p);
    EXPECT_NEAR((h.normal - CVector{1.0, 0.0}).norm(), 0.0, 1e-15);
    EXPECT_EQ(h.anchor, p.point);
    const BoundaryPoint q{CPoint{cplx(0, 1)}, CVector{cplx(0, -1)}, CPoint{cplx(0, 0.5)}};
    const Hyperplane hd = verified_supporting_hyperplane(disk(), q);
    EXPECT_NEAR((hd.normal - CVector{cplx(0, 1)}).norm(), 0.0, 1e-15);
    const BoundaryPoint e{CPoint{0.0, 1.0}, CVector{0.0, -1.0}, CPoint{0.0, 0.5}};
    const Hyperplane he = verified_supporting_hyperplane(ell2(), e);
    const CVector grad = ell2().rho->dz(e.point); // (0, 2)
    EXPECT_NEAR(std::abs(grad[1] - 2.0), 0.0, 1e-15);
    EXPECT_NEAR((he.normal - CVector{0.0, 1.0}).norm(), 0.0, 1e-15);
}

TEST(SupportingHyperplane, Errors)
{
    const BoundaryPoint p = boundary_point_towards(spsc(), CVector{1.0, 0.0});
    try {
        supporting_hyperplane(spsc(), p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NotConvex);
    }
    // A plane through an interior point meets the domain.
    const Hyperplane bad{CPoint{0.5, 0.0}, CVector{1.0, 0.0}};
    try {
        verify_supporting_hyperplane(ball(), bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::SeparationViolated);
    }
}

TEST(MConvexityAudit, BallOrderTwoIsStable)
{
    const AuditResult a = mconvexity_audit(ball(), 2.0, 1000, 11);
    const AuditResult b = mconvexity_audit(ball(), 2.0, 4000, 11);
    EXPECT_TRUE(std::isfinite(a.C_hat));
    EXPECT_FALSE(a.diverging);
    EXPECT_NEAR(b.C_hat / a.C_hat, 1.0, 0.10);
    // Tangential geometry: delta(z; v_H) = sqrt(delta (2 - delta)) <= sqrt(2) delta^(1/2).
    EXPECT_LE(b.C_hat, std::sqrt(2.0) + 1e-12);
}

TEST(MConvexityAudit, BallOrderOneDiverges)
{
    const AuditResult a = mconvexity_audit(ball(), 1.0, 1000, 12);
    EXPECT_TRUE(a.diverging);
    EXPECT_NEAR(a.slope, -0.5, 0.15);
    EXPECT_GT(a.C_hat, 100.0);
}

TEST(MConvexityAudit, DiskIsOneConvex)
{
    const AuditResult a = mconvexity_audit(disk(), 1.0, 300, 13);
    EXPECT_NEAR(a.C_hat, 1.0, 1e-9);
    EXPECT_FALSE(a.diverging);
}

TEST(MConvexityAudit, EllipsoidOrderIsTwiceTheExponent)
{
    EXPECT_TRUE(mconvexity_audit(ell2(), 2.0, 400, 14).diverging);
    EXPECT_FALSE(mconvexity_audit(ell2(), 4.0, 400, 14).diverging);
}

TEST(Presets, SpscLeviPositiveAndDentNonconvex)
{
    const LeviAudit a = levi_positivity_audit(spsc(), 200, 1);
    EXPECT_TRUE(a.positive);
    EXPECT_TRUE(levi_positivity_audit(dent(), 200, 1).positive);
    // Boundary points on either side of the dent: their chord leaves the domain.
    auto inner = [&](double theta) {
        const BoundaryPoint bp = boundary_point_towards(dent(), CVector{std::polar(1.0, theta), 0.0});
        return dent().deep_point + 0.99 * (bp.point - dent().deep_point);
    };
    const CPoint x = inner(0.5), y = inner(-0.5);
    EXPECT_TRUE(dent().contains(x));
    EXPECT_TRUE(dent().contains(y));
    EXPECT_FALSE(dent().contains(midpoint(x, y)));
}

TEST(Presets, DerivedGeometry)
{
    EXPECT_DOUBLE_EQ(ball().diameter_scale, 2.0);
    EXPECT_NEAR(ell2().diameter_scale, std::sqrt(5.0), 0.05);
    EXPECT_EQ(ball().boundary_pool.size(), 8u);
    EXPECT_TRUE(spsc().boundary_pool.empty());
    EXPECT_GT(spsc().inradius, 0.8);
    EXPECT_NEAR(boundary_distance(spsc(), spsc().deep_point), spsc().inradius, 1e-12);
}

TEST(Presets, GeneralExpressionDomain)
{
    const DomainSpec g = make_general("abs2(z1) + 4*abs2(z2) - 1", 2, ConvexClass{2.0, std::nullopt}, 2.0);
    EXPECT_NEAR(boundary_distance(g, CPoint::origin(2)), 0.5, 1e-9);
    EXPECT_NEAR(g.inradius, 0.5, 1e-6);
    EXPECT_NEAR(directional_boundary_distance(g, CPoint::origin(2), CVector{1.0, 0.0}), 1.0, 1e-9);
    EXPECT_THROW(make_general("abs2(z1) + 1", 1, ConvexClass{}, 2.0), Error);
}
