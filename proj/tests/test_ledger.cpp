#include <gtest/gtest.h>

#include "kob/ledger.hpp"

using namespace kob;

namespace {

// Dense grid maximum of log(1+x)/x^(1/N), refined by a local grid.
double log_constant_oracle(int N)
{
    double best_u = 0.0, best = -1.0;
    for (int i = 0; i <= 1000000; ++i) {
        const double u = -20.0 + 60.0 * i / 1e6;
        const double x = std::exp(u);
        const double f = std::log1p(x) / std::pow(x, 1.0 / N);
        if (f > best) best = f, best_u = u;
    }
    for (int i = -100000; i <= 100000; ++i) {
        const double x = std::exp(best_u + 6e-5 * i / 1e5);
        best = std::max(best, std::log1p(x) / std::pow(x, 1.0 / N));
    }
    return best;
}

} // namespace

TEST(LogConstant, ExamplesAndCertificate)
{
    EXPECT_EQ(log_constant(1), 1.0);
    EXPECT_NEAR(log_constant(2), log_constant_oracle(2), 1e-12);
    EXPECT_NEAR(log_constant(5), log_constant_oracle(5), 1e-12);
    EXPECT_GT(log_constant(4), log_constant(2));
    for (int N : {1, 2, 3, 10, 100, 10000}) {
        const LogConstantCertificate c = certify_log_constant(N);
        EXPECT_EQ(c.violations, 0u) << N;
        EXPECT_EQ(c.grid_points, 10000u);
        EXPECT_LE(c.worst_ratio, 1.0 + 1e-13);
    }
    // Large N: the supremum sits at x = e^N, far beyond the grid.
    EXPECT_NEAR(log_constant(10000), 10000.0 / std::exp(1.0), 1.0);
}

TEST(MConvexChain, ClosedFormsAndLimits)
{
    const ConstantLedger one = mconvex_chain(1, 2, 1.0, 2.0, 1.0);
    EXPECT_DOUBLE_EQ(one.alpha, 1.0);
    EXPECT_FALSE(one.strict_bounds_hold); // alpha = 3m^2 - 2m exactly when m = 1

    const ConstantLedger big = mconvex_chain(2, 10000, 1.0, 2.0, 1.0);
    EXPECT_NEAR(big.alpha, 8.0, 0.08);
    EXPECT_DOUBLE_EQ(big.c2_bound, 1.0 / 32.0);
    EXPECT_LT(big.c2, 1.0 / 32.0);

    double prev = std::numeric_limits<double>::infinity();
    for (int N = 3; N <= 10000; N = N < 20 ? N + 1 : N * 2) {
        const ConstantLedger L = mconvex_chain(2, N, 1.5, 2.0, 0.7);
        EXPECT_GT(L.alpha, 8.0);
        EXPECT_LT(L.alpha, prev);
        EXPECT_TRUE(L.strict_bounds_hold);
        EXPECT_DOUBLE_EQ(L.c2, 1.0 / (4.0 * L.alpha));
        prev = L.alpha;
    }
    EXPECT_THROW(mconvex_chain(2, 2, 1.0, 1.0, 1.0), Error);
    EXPECT_THROW(mconvex_chain(2, 5, 0.5, 1.0, 1.0), Error);
}

TEST(MConvexChain, DirectFormulaOracle)
{
    const double m = 2, lambda = 1.5, A = 2.0, C = 0.7;
    const int N = 5;
    const ConstantLedger L = mconvex_chain(m, N, lambda, A, C);
    const double CN = log_constant_oracle(N);
    const double alpha = (3 * m - 2 - m / N) / (1 / m - 1.0 / N);
    const double Cp = std::pow(std::pow(2.0, 1 + 1 / m) * lambda * CN * std::pow(A, 1.0 / N) * C, 1.0 / (1 - 1.0 / N));
    const double Cpp = std::pow(4 * A * Cp, 2 * m) * std::pow(C, m);
    EXPECT_NEAR(L.alpha, alpha, 1e-12);
    EXPECT_NEAR(L.C_prime() / Cp, 1.0, 1e-10);
    EXPECT_NEAR(L.C_doubleprime() / Cpp, 1.0, 1e-10);
    EXPECT_NEAR(L.C_tilde_verbatim() / (Cpp / (2 * Cp)), 1.0, 1e-10);
    EXPECT_NEAR(L.C_tilde_consistent() / (1.0 / (Cpp * std::pow(2 * Cp, alpha))), 1.0, 1e-10);
}

TEST(SpscChain, ClosedFormsAndLimits)
{
    EXPECT_NEAR(spsc_chain(3, 1.0, 2.0, 0.5, 0.5).alpha, 13.0, 1e-12);
    EXPECT_NEAR(spsc_chain(10000, 1.0, 2.0, 0.5, 0.5).alpha, 4.0, 0.04);
    for (int N = 3; N <= 10000; N = N < 20 ? N + 1 : N * 2) {
        const ConstantLedger L = spsc_chain(N, 1.0, 2.0, 0.5, 0.5);
        EXPECT_GT(L.alpha, 4.0);
        EXPECT_LT(L.c2, 1.0 / 16.0);
    }
    // e^(-2NC) underflows at N = 10^4; the logarithms stay finite.
    const ConstantLedger big = spsc_chain(10000, 1.0, 2.0, 0.5, 0.5);
    EXPECT_TRUE(std::isfinite(big.log_C_tilde_consistent));
    EXPECT_EQ(big.C_tilde_consistent(), 0.0);
    EXPECT_THROW(spsc_chain(2, 1.0, 2.0, 0.5, 0.5), Error);
}

TEST(SpscChain, DirectFormulaOracle)
{
    const double lambda = 1.2, A = 2.0, C1 = 0.5, C = 0.5;
    const int N = 5;
    const ConstantLedger L = spsc_chain(N, lambda, A, C1, C);
    const double CN = log_constant_oracle(N), n = N;
    const double alpha = (1 + n * n / ((n - 1) * (n - 1))) * (1 - 1 / n) / (0.5 - 1 / n);
    const double Cp = std::pow(std::sqrt(2.0) * lambda * CN * std::pow(A, 1 / n) / C1, n / (n - 1));
    const double Cpp = std::pow(4 * A * Cp, 2 * n / (n - 1));
    const double e = std::exp(-2 * n * C);
    EXPECT_NEAR(L.alpha, alpha, 1e-12);
    EXPECT_NEAR(L.C_prime() / Cp, 1.0, 1e-10);
    EXPECT_NEAR(L.C_doubleprime() / Cpp, 1.0, 1e-10);
    EXPECT_NEAR(L.C_tilde_verbatim() / (std::min(Cpp, e) / Cp), 1.0, 1e-10);
    EXPECT_NEAR(L.C_tilde_consistent() / (std::min(e, 1 / Cpp) / std::pow(2 * Cp, alpha)), 1.0, 1e-10);
}

TEST(TheoremConstants, FormulaAndMonotonicity)
{
    const ConstantLedger L = mconvex_chain(2, 10, 1.0, 2.0, 1.0);
    const ConstantLedger T = theorem_constants(L, Hats{0.3, std::nullopt, 0.4, 0.0});
    EXPECT_EQ(T.c2, 1.0 / (4.0 * L.alpha));
    const double Kp = 0.3 - 0.25 * std::log(1.0 / 9.0);
    EXPECT_NEAR(*T.K_prime, Kp, 1e-15);
    const double direct =
        std::max(2.0 * std::pow(std::exp(2 * Kp + 0.8) / L.C_tilde_consistent(), 1.0 / L.alpha), 2.0 * L.A);
    EXPECT_NEAR(*T.c1() / direct, 1.0, 1e-10);
    const ConstantLedger V = theorem_constants(L, Hats{0.3, std::nullopt, 0.4, 0.0}, CTildeVariant::Verbatim);
    EXPECT_NE(*V.log_c1, *T.log_c1);

    const ConstantLedger S = spsc_chain(10, 1.0, 2.0, 0.5, 0.5);
    auto c1 = [&](double Kp2, double Kpp, double R) {
        return *theorem_constants(S, Hats{0.0, Kp2, Kpp, R}).log_c1;
    };
    const double base = c1(0.2, 0.3, 0.1), h = 1e-3;
    EXPECT_GE(c1(0.2 + h, 0.3, 0.1), base);
    EXPECT_GE(c1(0.2, 0.3 + h, 0.1), base);
    EXPECT_GE(c1(0.2, 0.3, 0.1 + h), base);
    EXPECT_GT(c1(0.2, 1.3, 0.1), base);
    // The floor A lambda / C1 applies when the main term is small.
    EXPECT_GE(*theorem_constants(S, Hats{-50, std::nullopt, -50, 0}).log_c1, std::log(2.0 * 1.0 / 0.5) - 1e-15);
}

TEST(LedgerJson, FormulasAndProvenance)
{
    const ConstantLedger L = theorem_constants(spsc_chain(10000, 1.0, 2.0, 0.5, 0.5), Hats{0.1, std::nullopt, 0.4, 0.2});
    const nlohmann::json j = ledger_json(L);
    EXPECT_EQ(j["track"], "spsc");
    EXPECT_EQ(j["constants"]["alpha"]["formula"], "(1+N^2/(N-1)^2)(1-1/N)/(1/2-1/N)");
    EXPECT_EQ(j["constants"]["K"]["provenance"], "calibrated");
    EXPECT_EQ(j["constants"]["c2"]["provenance"], "formula");
    EXPECT_TRUE(j["constants"]["C_tilde_consistent"]["log"].is_number());
    EXPECT_TRUE(j["constants"]["c1"]["value"].is_null()); // overflows; the log is reported
    EXPECT_TRUE(j["constants"]["c1"]["log"].is_number());
    EXPECT_EQ(j["c_tilde_variant"], "consistent");
    EXPECT_EQ(default_n_grid(Track::MConvex, 2), (std::vector<int>{5, 10, 100, 10000}));
}

TEST(EmpiricalHats, BallOracle)
{
    const DomainSpec B = make_unit_ball(2);
    const CPoint o = CPoint::origin(2);
    HatsOptions opt;
    opt.r_pairs = 2;
    const EmpiricalHats a = empirical_hats(B, o, 200, 1, opt), b = empirical_hats(B, o, 200, 2, opt);
    // K(0,z) = artanh r: (1/2)log(1/delta) - K = -(1/2)log(1+r), zero at the base point.
    EXPECT_EQ(a.K, 0.0);
    EXPECT_LE(std::abs(a.K - b.K), 0.15 * std::max(std::abs(a.K), std::abs(b.K)));
    // K - (1/2)log(1/delta) = (1/2)log(1+r) < (1/2)log 2.
    EXPECT_LT(a.K_doubleprime, 0.5 * std::log(2.0));
    EXPECT_GT(a.K_doubleprime, 0.5 * std::log(1.9));
    EXPECT_NEAR(a.K_doubleprime, b.K_doubleprime, 0.15 * a.K_doubleprime);
    ASSERT_TRUE(a.C_lower && a.C1);
    EXPECT_LE(*a.C_lower, 0.5 * std::log(2.0) + 1e-12);
    EXPECT_GE(*a.C1, 1.0 / std::sqrt(2.0) - 1e-12);
    EXPECT_LE(BBConfig{}.C1, *a.C1); // the default constants are valid on the ball
    EXPECT_LE(*a.C_lower, BBConfig{}.C_lower);
    // Geodesics are unique here; R-hat is the sampling gap of the comparison.
    EXPECT_GE(a.R, 0.0);
    EXPECT_LT(a.R, 0.5);
}

TEST(EmpiricalHats, DeeperBaseReducesKDoublePrime)
{
    const DomainSpec B = make_unit_ball(2);
    HatsOptions opt;
    opt.r_pairs = 0;
    double prev = std::numeric_limits<double>::infinity();
    for (double r : {0.5, 0.25, 0.0}) {
        const double k = empirical_hats(B, CPoint{r, 0.0}, 400, 3, opt).K_doubleprime;
        EXPECT_LT(k, prev) << r;
        prev = k;
    }
}
