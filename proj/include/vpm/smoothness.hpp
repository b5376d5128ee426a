#pragma once

// Modulus of smoothness omega(f, t)_p = sup_{0 < theta <= t} ||f - S_theta f||_p
// and an upper estimate of the K-functional
// K(f, t)_p = inf_g ||f - g||_p + t^2 ||D g||_p.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "vpm/errors.hpp"
#include "vpm/function_space.hpp"
#include "vpm/kernel.hpp"
#include "vpm/operators.hpp"
#include "vpm/quadrature.hpp"

namespace vpm::smooth {

/// The upper end t0 of the admissible scales 0 < t < t0.
inline constexpr double t0 = std::numbers::pi;

inline constexpr int default_theta_grid_size = 64;

/// Ratio between the largest and smallest step of the sup grid.
inline constexpr double theta_grid_span = 256.0;

struct ModulusQuery {
    std::string f;
    double t = 0.5;
    double p = 2.0;
    int theta_grid_size = default_theta_grid_size;
};

struct KFunctionalQuery {
    std::string f;
    double t = 0.5;
    double p = 2.0;
    std::vector<int> candidate_degrees;
};

/// Geometric grid of `size` steps from t/256 to t (just {t} when size is 1).
inline std::vector<double> modulus_theta_grid(double t, int size)
{
    if (!(t > 0.0 && t <= std::numbers::pi))
        throw domain_error("modulus: t must lie in (0, pi]");
    if (size < 1)
        throw domain_error("modulus: theta grid size must be >= 1");
    std::vector<double> grid(size);
    if (size == 1) {
        grid[0] = t;
        return grid;
    }
    const double lo = t / theta_grid_span;
    for (int i = 0; i < size; ++i)
        grid[i] = lo * std::pow(theta_grid_span, static_cast<double>(i) / (size - 1));
    grid.back() = t;
    return grid;
}

namespace detail {

// S_pi is not covered by the translation multipliers; the endpoint is nudged inward.
inline double admissible_step(double theta)
{
    return std::min(theta, std::nextafter(std::numbers::pi, 0.0));
}

inline std::vector<double> norms_of(const NormEvaluator& ev, std::span<const double> coeffs,
                                    std::span<const double> p_list)
{
    const std::vector<double> vals = ev.values(coeffs);
    std::vector<double> out(p_list.size());
    for (std::size_t i = 0; i < p_list.size(); ++i)
        out[i] = ev.norm_from_values(vals, p_list[i]);
    return out;
}

inline void check_evaluator(const NormEvaluator& ev, const ZonalSpectral& f)
{
    if (std::abs(ev.lambda() - f.lambda) > 1e-12)
        throw usage_error("expansion parameter does not match the norm evaluator");
    if (f.band_limit() > ev.band_limit())
        throw usage_error("expansion degree " + std::to_string(f.band_limit()) + " exceeds the evaluator band limit "
                          + std::to_string(ev.band_limit()));
}

} // namespace detail

/// omega(f, t)_p for every p in p_list, sharing one evaluation of f - S_theta f per step.
inline std::vector<double> modulus_all(const NormEvaluator& ev, const ZonalSpectral& f, double t,
                                       std::span<const double> p_list, int theta_grid_size = default_theta_grid_size)
{
    detail::check_evaluator(ev, f);
    std::vector<double> q(f.coeffs.size());
    std::vector<std::vector<double>> diffs;
    for (double theta : modulus_theta_grid(t, theta_grid_size)) {
        special::q_normalized_table(f.lambda, std::cos(detail::admissible_step(theta)), std::span<double>(q));
        std::vector<double> diff(f.coeffs.size());
        for (std::size_t k = 0; k < diff.size(); ++k)
            diff[k] = (1.0 - q[k]) * f.coeffs[k];
        diffs.push_back(std::move(diff));
    }
    std::vector<double> best(p_list.size(), 0.0);
    for (const auto& vals : ev.values_many(diffs))
        for (std::size_t i = 0; i < best.size(); ++i)
            best[i] = std::max(best[i], ev.norm_from_values(vals, p_list[i]));
    return best;
}

inline double modulus(const NormEvaluator& ev, const ZonalSpectral& f, double t, double p,
                      int theta_grid_size = default_theta_grid_size)
{
    const double ps[] = {p};
    return modulus_all(ev, f, t, ps, theta_grid_size)[0];
}

/// Resolves the corpus id, projects it to degree `band_limit` and evaluates the modulus.
inline double modulus(const ModulusQuery& q, int d, int band_limit)
{
    if (!is_valid_p(q.p))
        throw usage_error("modulus: p must be >= 1");
    const ZonalProfile profile = resolve_function(q.f, d);
    const ZonalSpectral f = to_spectral(profile, band_limit, special::lambda_of(d));
    const NormEvaluator ev(d, f.band_limit());
    return modulus(ev, f, q.t, q.p, q.theta_grid_size);
}

/// Dyadic degrees 1, 2, 4, ... together with the cap 4 ceil(1/t^2).
inline std::vector<int> default_candidate_degrees(double t)
{
    if (!(t > 0.0 && t <= t0))
        throw domain_error("k_functional: t must lie in (0, pi]");
    // 1/t^2 is computed from t = n^{-1/2}; the slack keeps ceil from rounding n up to n + 1.
    const int cap = 4 * static_cast<int>(std::ceil(1.0 / (t * t) - 1e-9));
    std::vector<int> degrees;
    for (int m = 1; m < cap; m *= 2)
        degrees.push_back(m);
    degrees.push_back(cap);
    return degrees;
}

/// Iteration powers j of the candidates V_m^j f.
inline constexpr int candidate_powers[] = {1, 2, 7};

/// min over g in {0} and {V_m^j f} of ||f - g||_p + t^2 ||D g||_p, for every p in p_list.
inline std::vector<double> k_functional_all(const NormEvaluator& ev, const ZonalSpectral& f, double t,
                                            std::span<const double> p_list, const std::vector<int>& degrees)
{
    detail::check_evaluator(ev, f);
    if (!(t > 0.0 && t <= t0))
        throw domain_error("k_functional: t must lie in (0, pi]");
    if (degrees.empty())
        throw usage_error("k_functional: candidate degree list is empty");
    const int d = ev.dimension();
    const double t2 = t * t;
    // Batch layout: f itself (the g = 0 candidate), then (f - g, D g) for every candidate g.
    std::vector<std::vector<double>> batch{f.coeffs};
    for (int m : degrees) {
        if (m < 1)
            throw usage_error("k_functional: candidate degrees must be >= 1");
        if (m > ev.band_limit())
            throw usage_error("k_functional: candidate degree " + std::to_string(m) + " exceeds the band limit "
                              + std::to_string(ev.band_limit()));
        const auto w = kernel::vpm_multipliers(m, d, f.band_limit());
        for (int j : candidate_powers) {
            std::vector<double> diff(f.coeffs.size());
            std::vector<double> dg(f.coeffs.size());
            for (std::size_t k = 0; k < f.coeffs.size(); ++k) {
                const double mult = j == 1 ? w.values[k] : std::pow(w.values[k], j);
                const double g = mult * f.coeffs[k];
                diff[k] = f.coeffs[k] - g;
                dg[k] = -static_cast<double>(k) * (static_cast<double>(k) + d - 2) * g;
            }
            batch.push_back(std::move(diff));
            batch.push_back(std::move(dg));
        }
    }
    const auto vals = ev.values_many(batch);
    std::vector<double> best(p_list.size());
    for (std::size_t i = 0; i < best.size(); ++i) {
        best[i] = ev.norm_from_values(vals[0], p_list[i]);
        for (std::size_t c = 1; c + 1 < vals.size(); c += 2)
            best[i] = std::min(best[i], ev.norm_from_values(vals[c], p_list[i])
                                            + t2 * ev.norm_from_values(vals[c + 1], p_list[i]));
    }
    return best;
}

inline double k_functional_estimate(const NormEvaluator& ev, const ZonalSpectral& f, double t, double p,
                                    const std::vector<int>& degrees)
{
    const double ps[] = {p};
    return k_functional_all(ev, f, t, ps, degrees)[0];
}

inline double k_functional_estimate(const KFunctionalQuery& q, int d, int band_limit)
{
    if (!is_valid_p(q.p))
        throw usage_error("k_functional: p must be >= 1");
    const ZonalProfile profile = resolve_function(q.f, d);
    const ZonalSpectral f = to_spectral(profile, band_limit, special::lambda_of(d));
    const NormEvaluator ev(d, f.band_limit());
    const auto degrees = q.candidate_degrees.empty() ? default_candidate_degrees(q.t) : q.candidate_degrees;
    return k_functional_estimate(ev, f, q.t, q.p, degrees);
}

struct EquivalenceRow {
    double t = 0.0;
    double modulus = 0.0;
    double k_estimate = 0.0;
    /// modulus / k_estimate; NaN when both vanish.
    double ratio = 0.0;
};

inline double safe_ratio(double num, double den, double floor = 1e-12)
{
    if (std::abs(den) <= floor && std::abs(num) <= floor)
        return std::numeric_limits<double>::quiet_NaN();
    return num / den;
}

inline std::vector<EquivalenceRow> equivalence_table(const NormEvaluator& ev, const ZonalSpectral& f, double p,
                                                     const std::vector<double>& t_list,
                                                     int theta_grid_size = default_theta_grid_size)
{
    std::vector<EquivalenceRow> rows;
    for (double t : t_list) {
        EquivalenceRow r;
        r.t = t;
        r.modulus = modulus(ev, f, t, p, theta_grid_size);
        r.k_estimate = k_functional_estimate(ev, f, t, p, default_candidate_degrees(t));
        r.ratio = safe_ratio(r.modulus, r.k_estimate);
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<EquivalenceRow> equivalence_table(std::string_view id, double p, const std::vector<double>& t_list,
                                                     int d, int band_limit,
                                                     int theta_grid_size = default_theta_grid_size)
{
    const ZonalProfile profile = resolve_function(id, d);
    const ZonalSpectral f = to_spectral(profile, band_limit, special::lambda_of(d));
    const NormEvaluator ev(d, f.band_limit());
    return equivalence_table(ev, f, p, t_list, theta_grid_size);
}

// ---------------------------------------------------------------------------
// Direct pathway on S^2

/// S_theta g at colatitude gamma for a zonal profile on S^2: the mean of g over
/// the circle of radius theta, cos(arc) = cos gamma cos theta + sin gamma sin theta cos phi.
template <typename G>
double translate_profile(G&& g, double gamma, double theta, int circle_order)
{
    const double a = std::cos(gamma) * std::cos(theta);
    const double b = std::sin(gamma) * std::sin(theta);
    quad::CompensatedSum s;
    for (int j = 0; j < circle_order; ++j) {
        const double c = std::clamp(a + b * std::cos(2.0 * std::numbers::pi * j / circle_order), -1.0, 1.0);
        s.add(g(std::acos(c)));
    }
    return s.value() / circle_order;
}

struct DirectModulusOptions {
    int theta_grid_size = default_theta_grid_size;
    int gamma_points = 1024;
    int circle_order = 256;
};

/// omega(f, t)_p at d = 3 straight from the profile, without a spectral
/// truncation: ||g - S_theta g||_p over a colatitude grid, S_theta by circle means.
inline double modulus_direct(const ZonalProfile& profile, double t, double p, const DirectModulusOptions& opt = {})
{
    if (!is_valid_p(p))
        throw usage_error("modulus: p must be >= 1");
    if (opt.gamma_points < 2 || opt.circle_order < 1)
        throw domain_error("modulus_direct: grid sizes must be positive");
    const bool sup = std::isinf(p);
    std::vector<double> gammas;
    quad::ThetaRule rule;
    if (sup) {
        gammas = sup_theta_grid(opt.gamma_points);
    } else {
        rule = quad::theta_rule(opt.gamma_points, 0.5);
        gammas = rule.theta;
    }
    double best = 0.0;
    std::vector<double> h(gammas.size());
    for (double theta : modulus_theta_grid(t, opt.theta_grid_size)) {
        for (std::size_t i = 0; i < gammas.size(); ++i)
            h[i] = profile.g(gammas[i]) - translate_profile(profile.g, gammas[i], theta, opt.circle_order);
        double v = 0.0;
        if (sup) {
            for (double x : h)
                v = std::max(v, std::abs(x));
        } else {
            quad::CompensatedSum s;
            for (std::size_t i = 0; i < h.size(); ++i)
                s.add(rule.weights[i] * std::pow(std::abs(h[i]), p));
            v = std::pow(2.0 * std::numbers::pi * s.value(), 1.0 / p);
        }
        best = std::max(best, v);
    }
    return best;
}

/// Least-squares slope of log y against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw usage_error("log_log_slope: need two or more paired samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace vpm::smooth
