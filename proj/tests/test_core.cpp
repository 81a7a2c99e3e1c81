#include <gtest/gtest.h>

#include <set>

#include "kob/core.hpp"
#include "kob/interval.hpp"
#include "kob/parallel.hpp"
#include "kob/rng.hpp"

using namespace kob;

TEST(Core, PointVectorArithmetic)
{
    const CPoint a{cplx(1, 2), cplx(3, -1)};
    const CPoint b{cplx(0, 1), cplx(1, 1)};
    const CVector d = a - b;
    EXPECT_EQ(d[0], cplx(1, 1));
    EXPECT_EQ(d[1], cplx(2, -2));
    EXPECT_EQ(b + d, a);
    EXPECT_DOUBLE_EQ(d.norm2(), 10.0);
    EXPECT_EQ(midpoint(a, b), lerp(a, b, 0.5));
}

TEST(Core, HermitianProduct)
{
    const CVector u{cplx(0, 1), cplx(2, 0)};
    const CVector v{cplx(1, 0), cplx(0, 1)};
    // i*1 + 2*conj(i) = i - 2i = -i
    EXPECT_EQ(hdot(u, v), cplx(0, -1));
    EXPECT_DOUBLE_EQ(rdot(u, u), u.norm2());
}

TEST(Core, RealCoordinates)
{
    CPoint p(2);
    p.set_real_coord(0, 1.0);
    p.set_real_coord(3, -2.0);
    EXPECT_EQ(p[0], cplx(1, 0));
    EXPECT_EQ(p[1], cplx(0, -2));
    EXPECT_DOUBLE_EQ(p.real_coord(3), -2.0);
}

TEST(Core, DimensionChecks)
{
    EXPECT_THROW(CPoint(0), Error);
    EXPECT_THROW(CPoint(5), Error);
    EXPECT_THROW(CVector(2).normalized(), Error);
}

TEST(Core, ArtanhFromComplement)
{
    for (double s : {0.0, 0.1, 0.5, 0.9, 0.999999})
        EXPECT_NEAR(artanh_from_complement(s, 1.0 - s), std::atanh(s), 1e-12);
}

TEST(Interval, Arithmetic)
{
    const Interval a(1.0, 2.0), b(0.5, 3.0);
    const Interval s = a + b;
    EXPECT_DOUBLE_EQ(s.lo, 1.5);
    EXPECT_DOUBLE_EQ(s.hi, 5.0);
    const Interval d = a - b;
    EXPECT_DOUBLE_EQ(d.lo, -2.0);
    EXPECT_DOUBLE_EQ(d.hi, 1.5);
    const Interval n = -2.0 * a;
    EXPECT_DOUBLE_EQ(n.lo, -4.0);
    EXPECT_DOUBLE_EQ(n.hi, -2.0);
    EXPECT_TRUE(a.contains(1.5));
    EXPECT_FALSE(a.contains(2.1));
    EXPECT_TRUE(a.contains(2.1, 0.2));
    EXPECT_THROW(Interval(2.0, 1.0), Error);
}

TEST(Interval, MinMaxExp)
{
    const Interval a(1.0, 4.0), b(2.0, 3.0);
    EXPECT_DOUBLE_EQ(min(a, b).lo, 1.0);
    EXPECT_DOUBLE_EQ(min(a, b).hi, 3.0);
    EXPECT_DOUBLE_EQ(max(a, b).lo, 2.0);
    EXPECT_DOUBLE_EQ(max(a, b).hi, 4.0);
    EXPECT_DOUBLE_EQ(exp(Interval(0.0, 1.0)).hi, std::exp(1.0));
}

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST(Philox, KnownAnswers)
{
    using philox::Block;
    EXPECT_EQ(philox::philox4x32_10(Block{0, 0, 0, 0}, {0, 0}),
              (Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(philox::philox4x32_10(Block{~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}),
              (Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(philox::philox4x32_10(Block{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                    {0xa4093822u, 0x299f31d0u}),
              (Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterRng, StreamsAreReproducibleAndDistinct)
{
    CounterRng a(7, stream_id("x"), 3), b(7, stream_id("x"), 3), c(7, stream_id("x"), 4);
    for (int i = 0; i < 10; ++i) {
        const auto va = a.next_u64();
        EXPECT_EQ(va, b.next_u64());
        EXPECT_NE(va, c.next_u64());
    }
    EXPECT_NE(stream_id("gh-envelope"), stream_id("separation"));
}

TEST(CounterRng, UniformMoments)
{
    CounterRng r(1, 2, 3);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        s += u;
        s2 += u * u;
    }
    EXPECT_NEAR(s / n, 0.5, 5e-3);
    EXPECT_NEAR(s2 / n - 0.25, 1.0 / 12.0 - 0.0, 5e-3);
}

TEST(CounterRng, NormalMoments)
{
    CounterRng r(11, 0, 0);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 1e-2);
    EXPECT_NEAR(s2 / n, 1.0, 2e-2);
}

TEST(CounterRng, UnitVectorAndBall)
{
    CounterRng r(5, 0, 0);
    for (int i = 0; i < 1000; ++i) {
        EXPECT_NEAR(r.unit_vector(3).norm(), 1.0, 1e-14);
        EXPECT_LT(r.in_unit_ball(2).norm(), 1.0);
    }
}

TEST(Parallel, WritesByIndexAndRethrows)
{
    std::vector<int> out(1000);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
    EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                     if (i == 7) fail(Errc::InvalidInput, "boom");
                 }),
                 Error);
}
