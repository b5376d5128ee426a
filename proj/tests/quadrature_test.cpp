#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "vpm/quadrature.hpp"
#include "vpm/special_fn.hpp"

using namespace vpm::quad;
using std::numbers::pi;

TEST(GaussLegendre, OrderOneAndTwo)
{
    const auto r1 = gauss_legendre(1);
    ASSERT_EQ(r1.order(), 1);
    EXPECT_NEAR(r1.nodes[0], 0.0, 1e-16);
    EXPECT_NEAR(r1.weights[0], 2.0, 1e-15);

    const auto r2 = gauss_legendre(2);
    EXPECT_NEAR(r2.nodes[0], -1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(r2.nodes[1], 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(r2.weights[0], 1.0, 1e-15);
    EXPECT_NEAR(r2.weights[1], 1.0, 1e-15);
    EXPECT_NEAR(r2.weights[0] * r2.nodes[0] * r2.nodes[0] + r2.weights[1] * r2.nodes[1] * r2.nodes[1], 2.0 / 3.0,
                1e-15);
    EXPECT_THROW(gauss_legendre(0), std::domain_error);
}

TEST(GaussLegendre, StructureAndExactness)
{
    for (int order : {3, 8, 17, 64, 101, 400}) {
        const auto r = gauss_legendre(order);
        ASSERT_EQ(r.order(), order);
        ASSERT_EQ(r.weights.size(), r.nodes.size());
        for (int i = 1; i < order; ++i)
            EXPECT_LT(r.nodes[i - 1], r.nodes[i]);
        for (double w : r.weights)
            EXPECT_GT(w, 0.0);
        EXPECT_NEAR(accurate_sum(r.weights), 2.0, 1e-12);
        if (order > 64)
            continue;
        for (int j = 0; j <= 2 * order - 1; ++j) {
            CompensatedSum s;
            for (int i = 0; i < order; ++i)
                s.add(r.weights[i] * std::pow(r.nodes[i], j));
            const double exact = j % 2 == 1 ? 0.0 : 2.0 / (j + 1);
            EXPECT_NEAR(s.value(), exact, 1e-12) << "order=" << order << " j=" << j;
        }
    }
}

TEST(GaussLegendre, NodesAreLegendreRoots)
{
    const int n = 250;
    const auto r = gauss_legendre(n);
    for (double x : r.nodes)
        EXPECT_NEAR(vpm::special::gegenbauer_p(n, 0.5, x), 0.0, 1e-12);
}

TEST(IntegrateTheta, ConstantsAndPowers)
{
    EXPECT_NEAR(integrate_theta([](double) { return 1.0; }, 0.5, 16), 2.0, 1e-14);
    EXPECT_NEAR(integrate_theta([](double) { return 1.0; }, 1.0, 16), pi / 2, 1e-14);
    // int_0^pi cos^2 sin = 2/3
    EXPECT_NEAR(integrate_theta([](double t) { return std::cos(t) * std::cos(t); }, 0.5, 24), 2.0 / 3.0, 1e-14);
}

TEST(IntegrateTheta, GegenbauerOrthogonality)
{
    for (double lambda : {0.5, 1.0, 1.5})
        for (int k = 0; k <= 12; ++k)
            for (int j = 0; j < k; ++j) {
                const double v = integrate_theta(
                    [&](double t) {
                        return vpm::special::q_normalized(k, lambda, t) * vpm::special::q_normalized(j, lambda, t);
                    },
                    lambda, k + j + 16);
                EXPECT_NEAR(v, 0.0, 1e-10) << "k=" << k << " j=" << j;
            }
}

TEST(IntegrateTheta, RefinementHandlesEndpointSingularity)
{
    // int_0^pi t^{-1/2} sin t dt: reference from a substitution t = s^2 that removes the singularity.
    const double reference = integrate_interval([](double s) { return 2.0 * std::sin(s * s); }, std::sqrt(pi), 200);
    const auto r = integrate_theta_refined([](double t) { return 1.0 / std::sqrt(t); }, 0.5, 32);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, reference, 1e-8 * reference);
}

TEST(IntegrateTheta, DoublingIsSelfConsistent)
{
    auto g = [](double t) { return std::exp(-4 * t * t) * std::cos(3 * t); };
    const double a = integrate_theta(g, 1.0, 64);
    const double b = integrate_theta(g, 1.0, 128);
    EXPECT_NEAR(a, b, 1e-13);
}

TEST(SphereGrid, WeightsAndPoints)
{
    for (int bands : {1, 4, 16, 64}) {
        const SphereGrid g(bands);
        EXPECT_EQ(g.size(), static_cast<std::size_t>(2 * bands * bands));
        EXPECT_EQ(g.azimuth_count(), 2 * bands);
        EXPECT_NEAR(g.total_weight(), 4 * pi, 1e-10);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto p = g.point(i);
            ASSERT_NEAR(std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]), 1.0, 1e-14);
            ASSERT_GT(g.weight(i), 0.0);
        }
        for (double t : g.polar_nodes()) {
            EXPECT_GT(t, 0.0);
            EXPECT_LT(t, pi);
        }
    }
    EXPECT_THROW(SphereGrid(0), std::domain_error);
}

TEST(SphereGrid, IntegratesLowDegreeHarmonics)
{
    const SphereGrid g(12);
    EXPECT_NEAR(g.integrate([](const auto&) { return 1.0; }), 4 * pi, 1e-12);
    EXPECT_NEAR(g.integrate([](const auto& p) { return p[2]; }), 0.0, 1e-13);
    EXPECT_NEAR(g.integrate([](const auto& p) { return p[0] * p[1]; }), 0.0, 1e-13);
    // int x^2 dsigma = 4 pi / 3; int x^4 y^2 z^6 via the exact monomial formula.
    EXPECT_NEAR(g.integrate([](const auto& p) { return p[0] * p[0]; }), 4 * pi / 3, 1e-12);
    auto monomial = [](int a, int b, int c) {
        using vpm::special::log_gamma;
        const double ba = (a + 1) / 2.0, bb = (b + 1) / 2.0, bc = (c + 1) / 2.0;
        return 2.0 * std::exp(log_gamma(ba) + log_gamma(bb) + log_gamma(bc) - log_gamma(ba + bb + bc));
    };
    EXPECT_NEAR(g.integrate([](const auto& p) { return std::pow(p[0], 4) * p[1] * p[1] * std::pow(p[2], 6); }),
                monomial(4, 2, 6), 1e-14);
}

TEST(CompensatedSum, RecoversCancellation)
{
    CompensatedSum s;
    s.add(1e16);
    s.add(1.0);
    s.add(-1e16);
    EXPECT_EQ(s.value(), 1.0);
}
