#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "vpm/operators.hpp"

using std::numbers::pi;
namespace ops = vpm::ops;

namespace {

vpm::ZonalSpectral random_band(int d, int seed)
{
    return vpm::to_spectral(vpm::resolve_function("randband:seed" + std::to_string(seed), d), vpm::random_band_limit,
                            vpm::special::lambda_of(d));
}

vpm::Vec3 random_unit(std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    return vpm::normalized({g(rng), g(rng), g(rng)});
}

} // namespace

TEST(Means, KillHighDegreesAndFixConstants)
{
    vpm::ZonalSpectral one{0.5, {1.0, 0.0, 0.0}, 0.0};
    const auto v = ops::vpm_means(one, 10);
    EXPECT_NEAR(v.coeffs[0], 1.0, 1e-14);
    auto f = random_band(3, 1);
    const auto v4 = ops::vpm_means(f, 4);
    EXPECT_EQ(v4.band_limit(), 4);
    EXPECT_THROW(ops::vpm_means(f, -1), vpm::domain_error);
    EXPECT_THROW(ops::vpm_iterated(f, 4, 0), vpm::domain_error);
}

TEST(Means, IteratedEqualsRepeated)
{
    const auto f = random_band(4, 3);
    for (int m : {2, 3, 7}) {
        auto repeated = f;
        for (int j = 0; j < m; ++j)
            repeated = ops::vpm_means(repeated, 12);
        const auto iterated = ops::vpm_iterated(f, 12, m);
        ASSERT_EQ(iterated.coeffs.size(), repeated.coeffs.size());
        for (std::size_t k = 0; k < iterated.coeffs.size(); ++k)
            EXPECT_NEAR(iterated.coeffs[k], repeated.coeffs[k], 1e-14) << "m=" << m << " k=" << k;
    }
}

TEST(Means, OperatorsCommute)
{
    const auto f = random_band(3, 5);
    const auto a = ops::laplace_beltrami(ops::vpm_means(ops::translate_spectral(f, 0.7), 16));
    const auto b = ops::vpm_means(ops::translate_spectral(ops::laplace_beltrami(f), 0.7), 16);
    for (std::size_t k = 0; k < a.coeffs.size(); ++k)
        EXPECT_NEAR(a.coeffs[k], b.coeffs[k], 1e-10 * std::max(1.0, std::abs(a.coeffs[k])));
}

TEST(Means, ContractionInEveryNorm)
{
    for (int d : {3, 4}) {
        const auto f = random_band(d, 11);
        vpm::NormEvaluator ev(d, vpm::random_band_limit);
        for (int n : {1, 4, 16})
            for (double p : {1.0, 2.0, vpm::p_inf})
                EXPECT_LE(ev.norm(ops::vpm_means(f, n), p), ev.norm(f, p) * (1 + 1e-12))
                    << "d=" << d << " n=" << n << " p=" << p;
    }
}

TEST(LaplaceBeltrami, Eigenvalues)
{
    for (int d : {3, 5}) {
        const double lambda = vpm::special::lambda_of(d);
        vpm::ZonalSpectral f{lambda, std::vector<double>(9, 1.0), 0.0};
        const auto lf = ops::laplace_beltrami(f);
        const auto l2f = ops::laplace_beltrami(f, 2);
        for (int k = 0; k <= 8; ++k) {
            EXPECT_EQ(lf.coeffs[k], -static_cast<double>(k) * (k + d - 2));
            EXPECT_EQ(l2f.coeffs[k], lf.coeffs[k] * lf.coeffs[k]);
        }
    }
    EXPECT_THROW(ops::laplace_beltrami(vpm::ZonalSpectral{0.5, {1.0}, 0.0}, 3), vpm::usage_error);
}

TEST(LaplaceBeltrami, MatchesFiniteDifferenceOfProfile)
{
    // On S^2, D g(theta) = g'' + cot(theta) g'.
    const auto f = random_band(3, 2);
    const auto lf = ops::laplace_beltrami(f);
    const double h = 1e-4;
    for (double t : {0.4, 1.1, 2.0, 2.7}) {
        auto g = [&](double s) { return vpm::eval_zonal(f, std::cos(s)); };
        const double d1 = (g(t + h) - g(t - h)) / (2 * h);
        const double d2 = (g(t + h) - 2 * g(t) + g(t - h)) / (h * h);
        const double expected = d2 + d1 / std::tan(t);
        EXPECT_NEAR(vpm::eval_zonal(lf, std::cos(t)), expected, 1e-4 * std::max(1.0, std::abs(expected)));
    }
}

TEST(Translation, RejectsEndpoints)
{
    const auto f = random_band(3, 1);
    EXPECT_THROW(ops::translate_spectral(f, 0.0), vpm::domain_error);
    EXPECT_THROW(ops::translate_spectral(f, pi), vpm::domain_error);
}

TEST(Translation, DirectPathwayMatchesSpectral)
{
    auto grid = std::make_shared<const vpm::quad::SphereGrid>(32);
    const vpm::Vec3 pole = vpm::grid_pole(*grid);
    const auto f = random_band(3, 42);
    const auto gf = vpm::sample_zonal(grid, pole, f);
    std::mt19937_64 rng(1);
    for (double theta : {0.05, 0.9, 2.3, 3.1}) {
        const auto st = ops::translate_spectral(f, theta);
        for (int i = 0; i < 20; ++i) {
            const vpm::Vec3 mu = random_unit(rng);
            const double spectral = vpm::eval_zonal(st, vpm::cos_arc(pole, mu));
            const double direct = ops::translate_direct(gf, theta, mu, ops::default_circle_order(f.band_limit()));
            EXPECT_NEAR(direct, spectral, 1e-12) << "theta=" << theta;
        }
    }
}

TEST(Translation, TangentFrameIsOrthonormal)
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const vpm::Vec3 mu = i == 0 ? vpm::north_pole : random_unit(rng);
        const auto [u, v] = ops::tangent_frame(mu);
        EXPECT_NEAR(vpm::dot(u, u), 1.0, 1e-14);
        EXPECT_NEAR(vpm::dot(v, v), 1.0, 1e-14);
        EXPECT_NEAR(vpm::dot(u, mu), 0.0, 1e-14);
        EXPECT_NEAR(vpm::dot(v, mu), 0.0, 1e-14);
        EXPECT_NEAR(vpm::dot(u, v), 0.0, 1e-14);
    }
}

TEST(GridMeans, MatchSpectralMeans)
{
    // Exact when the grid integrates degree 20 + n polynomials.
    auto grid = std::make_shared<const vpm::quad::SphereGrid>(40);
    const vpm::Vec3 pole = vpm::grid_pole(*grid);
    const auto f = random_band(3, 42);
    const auto gf = vpm::sample_zonal(grid, pole, f);
    std::mt19937_64 rng(9);
    for (int n : {0, 3, 16}) {
        const auto spec = vpm::kernel::KernelSpec::make(n, 3);
        const auto vf = ops::vpm_means(f, n);
        for (int i = 0; i < 10; ++i) {
            const vpm::Vec3 mu = random_unit(rng);
            EXPECT_NEAR(ops::vpm_grid_at(gf, spec, mu), vpm::eval_zonal(vf, vpm::cos_arc(pole, mu)), 1e-12)
                << "n=" << n;
        }
    }
    EXPECT_THROW(ops::vpm_grid_at(gf, vpm::kernel::KernelSpec::make(3, 4), pole), vpm::usage_error);
}

TEST(GridMeans, DenseConvolutionOnSmallGrid)
{
    auto grid = std::make_shared<const vpm::quad::SphereGrid>(12);
    const vpm::Vec3 pole = vpm::grid_pole(*grid);
    vpm::ZonalSpectral f{0.5, {0.5, 1.0, -0.25}, 0.0};
    const auto out = ops::vpm_grid(vpm::sample_zonal(grid, pole, f), 4, vpm::kernel::KernelSpec::make(4, 3));
    const auto vf = ops::vpm_means(f, 4);
    for (std::size_t i = 0; i < grid->size(); ++i)
        EXPECT_NEAR(out.values[i], vpm::eval_zonal(vf, vpm::cos_arc(pole, grid->point(i))), 1e-13);
}
