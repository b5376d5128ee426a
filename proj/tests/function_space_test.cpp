#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "vpm/function_space.hpp"

using std::numbers::pi;

TEST(ParseP, AcceptsNumbersAndInfinity)
{
    EXPECT_EQ(vpm::parse_p("1"), 1.0);
    EXPECT_EQ(vpm::parse_p("2"), 2.0);
    EXPECT_EQ(vpm::parse_p("3.5"), 3.5);
    EXPECT_TRUE(std::isinf(vpm::parse_p("inf")));
    EXPECT_EQ(vpm::p_label(vpm::p_inf), "inf");
    EXPECT_EQ(vpm::p_label(2.0), "2");
}

TEST(ParseP, RejectsInvalid)
{
    EXPECT_THROW(vpm::parse_p("0.5"), vpm::usage_error);
    EXPECT_THROW(vpm::parse_p("two"), vpm::usage_error);
    EXPECT_THROW(vpm::parse_p(""), vpm::usage_error);
    EXPECT_THROW(vpm::parse_p("2x"), vpm::usage_error);
}

TEST(EvalZonal, MatchesNormalizedGegenbauer)
{
    const double lambda = 0.5;
    vpm::ZonalSpectral f{lambda, {0.3, -1.0, 0.0, 2.0}, 0.0};
    for (double t = 0.0; t <= pi; t += 0.1) {
        const double expected = 0.3 - std::cos(t) + 2.0 * vpm::special::q_normalized(3, lambda, t);
        EXPECT_NEAR(vpm::eval_zonal(f, std::cos(t)), expected, 1e-14);
    }
    EXPECT_THROW(vpm::eval_zonal(f, 1.5), vpm::domain_error);
    EXPECT_EQ(f.dimension(), 3);
    EXPECT_EQ(f.band_limit(), 3);
}

TEST(LpNorm, ConstantFunctionOnSphere)
{
    for (int d : {3, 4, 5}) {
        const double area = vpm::special::sphere_area(d);
        vpm::ZonalSpectral one{vpm::special::lambda_of(d), {1.0}, 0.0};
        EXPECT_NEAR(vpm::lp_norm_zonal(one, 1.0, d), area, 1e-12 * area);
        EXPECT_NEAR(vpm::lp_norm_zonal(one, 2.0, d), std::sqrt(area), 1e-12);
        EXPECT_NEAR(vpm::lp_norm_zonal(one, vpm::p_inf, d), 1.0, 1e-15);
    }
}

TEST(LpNorm, HarmonicTwoNormFromSquaredNorm)
{
    for (int d : {3, 4})
        for (int k : {1, 4, 16}) {
            const double lambda = vpm::special::lambda_of(d);
            std::vector<double> c(k + 1, 0.0);
            c[k] = 1.0;
            const double expected =
                std::sqrt(vpm::special::sphere_area(d - 1) * vpm::special::q_norm_squared(k, lambda));
            EXPECT_NEAR(vpm::lp_norm_zonal(vpm::ZonalSpectral{lambda, c, 0.0}, 2.0, d), expected, 1e-12);
        }
}

TEST(LpNorm, CuspOneNormClosedForm)
{
    // d = 3: 2 pi int_0^pi t sin t dt = 2 pi^2.
    const auto f = vpm::resolve_function("cusp:1", 3);
    EXPECT_NEAR(vpm::lp_norm_zonal(f, 1.0, 3, 256), 2 * pi * pi, 1e-10);
    EXPECT_NEAR(vpm::lp_norm_zonal(f, vpm::p_inf, 3), pi, 1e-15);
}

TEST(LpNorm, MonotoneInPAfterNormalization)
{
    // ||f||_p / |S|^{1/p} is nondecreasing in p.
    const int d = 3;
    const double area = vpm::special::sphere_area(d);
    const auto f = vpm::resolve_function("bump", d);
    double prev = 0.0;
    for (double p : {1.0, 1.5, 2.0, 4.0, 8.0}) {
        const double scaled = vpm::lp_norm_zonal(f, p, d, 512) / std::pow(area, 1.0 / p);
        EXPECT_GE(scaled, prev - 1e-14);
        prev = scaled;
    }
    EXPECT_GE(vpm::lp_norm_zonal(f, vpm::p_inf, d), prev);
}

TEST(NormEvaluator, AgreesWithDirectNorms)
{
    const int d = 4;
    const double lambda = vpm::special::lambda_of(d);
    vpm::NormEvaluator ev(d, 40);
    const auto f = vpm::to_spectral(vpm::resolve_function("randband:seed7", d), 40, lambda);
    for (double p : {1.0, 2.0, vpm::p_inf}) {
        const double direct = vpm::lp_norm_zonal(f, p, d, ev.order());
        EXPECT_NEAR(ev.norm(f, p), direct, 1e-12 * direct) << "p=" << p;
    }
    EXPECT_THROW(ev.norm(std::vector<double>(42, 1.0), 2.0), vpm::usage_error);
}

TEST(NormEvaluator, BatchMatchesSingle)
{
    vpm::NormEvaluator ev(3, 24);
    std::vector<std::vector<double>> batch{{1.0}, {0.0, 2.0, 0.0, 0.0}, std::vector<double>(25, 0.25), {}};
    const auto many = ev.values_many(batch);
    ASSERT_EQ(many.size(), batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b)
        EXPECT_EQ(many[b], ev.values(batch[b]));
}

TEST(Projection, ReproducesBandLimitedFunction)
{
    const int d = 3;
    const double lambda = vpm::special::lambda_of(d);
    const auto profile = vpm::resolve_function("randband:seed42", d);
    vpm::ZonalProfile no_exact{profile.id, profile.g, profile.smoothness_tag, std::nullopt};
    const auto f = vpm::zonal_project(no_exact, 32, lambda);
    ASSERT_TRUE(profile.exact_coeffs);
    for (int k = 0; k <= 32; ++k) {
        const double expected = k <= vpm::random_band_limit ? (*profile.exact_coeffs)[k] : 0.0;
        EXPECT_NEAR(f.coeffs[k], expected, 1e-12) << "k=" << k;
    }
    EXPECT_LT(f.reconstruction_error, 1e-12);
}

TEST(Projection, CuspConvergesUniformly)
{
    const double lambda = 0.5;
    const auto cusp = vpm::resolve_function("cusp:1", 3);
    const double e64 = vpm::zonal_project(cusp, 64, lambda).reconstruction_error;
    const double e256 = vpm::zonal_project(cusp, 256, lambda).reconstruction_error;
    EXPECT_LT(e256, e64);
    EXPECT_LT(e256, 0.05);
}

TEST(Corpus, ResolvesEveryDefaultId)
{
    const auto corpus = vpm::make_corpus(3);
    ASSERT_EQ(corpus.size(), vpm::default_corpus_ids().size());
    for (const auto& f : corpus) {
        EXPECT_FALSE(f.id.empty());
        EXPECT_TRUE(std::isfinite(f.g(1.0)));
    }
    EXPECT_EQ(vpm::resolve_function("harmonic:4", 3).g(0.0), 1.0);
    EXPECT_NEAR(vpm::resolve_function("cusp:0.5", 3).g(4.0), 2.0, 1e-15);
}

TEST(Corpus, RejectsUnknownIds)
{
    for (const char* id : {"nope", "cusp:", "cusp:-1", "harmonic:1.5", "harmonic:x", "randband:seedx", "bump:2"})
        EXPECT_THROW(vpm::resolve_function(id, 3), vpm::lookup_error) << id;
}

TEST(Corpus, RandomBandIsReproducible)
{
    const auto a = vpm::resolve_function("randband:seed42", 3);
    const auto b = vpm::resolve_function("randband:42", 3);
    const auto c = vpm::resolve_function("randband:seed43", 3);
    EXPECT_EQ(*a.exact_coeffs, *b.exact_coeffs);
    EXPECT_NE(*a.exact_coeffs, *c.exact_coeffs);
    for (double x : *a.exact_coeffs) {
        EXPECT_GE(x, -1.0);
        EXPECT_LT(x, 1.0);
    }
}

TEST(GridFunction, NormsAgreeWithZonalNorms)
{
    auto grid = std::make_shared<const vpm::quad::SphereGrid>(96);
    const vpm::Vec3 pole = vpm::grid_pole(*grid);
    const auto profile = vpm::resolve_function("randband:seed42", 3);
    const auto f = vpm::sample_zonal(grid, pole, profile);
    // p = 2 integrates a polynomial exactly; |f| has kinks, so p = 1 converges slowly.
    const double two = vpm::lp_norm_zonal(profile, 2.0, 3, 256);
    EXPECT_NEAR(vpm::lp_norm_grid(f, 2.0), two, 1e-12 * two);
    const double one = vpm::lp_norm_zonal(profile, 1.0, 3, 4096);
    EXPECT_NEAR(vpm::lp_norm_grid(f, 1.0), one, 1e-3 * one);
    const double sup = vpm::lp_norm_zonal(profile, vpm::p_inf, 3);
    EXPECT_LE(vpm::lp_norm_grid(f, vpm::p_inf), sup * (1 + 1e-12));
    EXPECT_GE(vpm::lp_norm_grid(f, vpm::p_inf), 0.98 * sup);
}
