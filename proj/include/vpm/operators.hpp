#pragma once

// V_n, V_n^m, S_theta, D and D^2. Every operator is diagonal on the harmonic
// expansion and acts on ZonalSpectral by a multiplier sequence; at d = 3 the
// translation and the means also have direct grid pathways used as oracles.

#include <cmath>
#include <numbers>
#include <vector>

#include "vpm/errors.hpp"
#include "vpm/function_space.hpp"
#include "vpm/geometry.hpp"
#include "vpm/kernel.hpp"
#include "vpm/quadrature.hpp"

namespace vpm::ops {

using kernel::MultiplierSequence;
using kernel::OperatorDescriptor;
using kernel::OperatorKind;

/// a_k -> m_k a_k.
inline ZonalSpectral apply_multiplier(const ZonalSpectral& f, const MultiplierSequence& m)
{
    if (m.values.size() < f.coeffs.size())
        throw usage_error("apply_multiplier: sequence has " + std::to_string(m.values.size())
                          + " entries but the expansion has " + std::to_string(f.coeffs.size()));
    ZonalSpectral out{f.lambda, f.coeffs, 0.0};
    for (std::size_t k = 0; k < out.coeffs.size(); ++k)
        out.coeffs[k] *= m.values[k];
    return out;
}

inline ZonalSpectral apply(const ZonalSpectral& f, const OperatorDescriptor& op)
{
    if (op.d != f.dimension())
        throw usage_error("operator dimension does not match the expansion");
    return apply_multiplier(f, kernel::multipliers(op, std::max(f.band_limit(), 0)));
}

/// V_n f: a_k -> omega_{n,k} a_k; the result is truncated to degree n.
inline ZonalSpectral vpm_means(const ZonalSpectral& f, int n)
{
    if (n < 0)
        throw domain_error("vpm_means: n must be >= 0");
    ZonalSpectral out = apply(f, OperatorDescriptor{OperatorKind::vpm, f.dimension(), n});
    if (out.band_limit() > n)
        out.coeffs.resize(n + 1);
    return out;
}

/// V_n^m f: a_k -> omega_{n,k}^m a_k.
inline ZonalSpectral vpm_iterated(const ZonalSpectral& f, int n, int m)
{
    if (m < 1)
        throw domain_error("vpm_iterated: m must be >= 1");
    if (n < 0)
        throw domain_error("vpm_iterated: n must be >= 0");
    if (m == 1)
        return vpm_means(f, n);
    ZonalSpectral out = apply(f, OperatorDescriptor{OperatorKind::vpm_power, f.dimension(), n, m});
    if (out.band_limit() > n)
        out.coeffs.resize(n + 1);
    return out;
}

/// S_theta f: a_k -> Q_k(cos theta) a_k, 0 < theta < pi.
inline ZonalSpectral translate_spectral(const ZonalSpectral& f, double theta)
{
    if (!(theta > 0.0 && theta < std::numbers::pi))
        throw domain_error("translate_spectral: theta must satisfy 0 < theta < pi");
    OperatorDescriptor op{OperatorKind::translation, f.dimension()};
    op.theta = theta;
    return apply(f, op);
}

/// D f (power 1) or D^2 f (power 2): a_k -> (-k(k + d - 2))^power a_k.
inline ZonalSpectral laplace_beltrami(const ZonalSpectral& f, int power = 1)
{
    if (power != 1 && power != 2)
        throw usage_error("laplace_beltrami: power must be 1 or 2");
    return apply(f, OperatorDescriptor{power == 1 ? OperatorKind::laplace_beltrami
                                                  : OperatorKind::laplace_beltrami_squared,
                                       f.dimension()});
}

// ---------------------------------------------------------------------------
// Direct pathways on S^2

/// Orthonormal completion {u, v} of mu: u = normalize(a x mu) with a the
/// north pole, or the x-axis when |mu_3| > 0.9; v = mu x u.
inline std::pair<Vec3, Vec3> tangent_frame(const Vec3& mu)
{
    const Vec3 a = std::abs(mu[2]) > 0.9 ? Vec3{1.0, 0.0, 0.0} : north_pole;
    const Vec3 u = normalized(cross(a, mu));
    const Vec3 v = cross(mu, u);
    return {u, v};
}

/// Default trapezoid size on the circle for a degree-K function.
inline int default_circle_order(int band_limit) { return 4 * band_limit + 16; }

/// Mean of f over the circle {nu : mu . nu = cos theta}, by the trapezoid rule.
template <typename F>
double circle_mean(F&& f, double theta, const Vec3& mu, int circle_order)
{
    if (!(theta > 0.0 && theta < std::numbers::pi))
        throw domain_error("translate_direct: theta must satisfy 0 < theta < pi");
    if (circle_order < 1)
        throw domain_error("translate_direct: circle order must be >= 1");
    const auto [u, v] = tangent_frame(mu);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    quad::CompensatedSum acc;
    for (int j = 0; j < circle_order; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / circle_order;
        const double cp = std::cos(phi);
        const double sp = std::sin(phi);
        const Vec3 nu{c * mu[0] + s * (u[0] * cp + v[0] * sp), c * mu[1] + s * (u[1] * cp + v[1] * sp),
                      c * mu[2] + s * (u[2] * cp + v[2] * sp)};
        acc.add(f(nu));
    }
    return acc.value() / circle_order;
}

/// S_theta f(mu) on S^2, using the grid function's analytic evaluator for the
/// off-grid circle points.
inline double translate_direct(const GridFunction& f, double theta, const Vec3& mu, int circle_order)
{
    if (!f.pointwise)
        throw usage_error("translate_direct: grid function carries no pointwise evaluator");
    return circle_mean(f.pointwise, theta, mu, circle_order);
}

/// V_n f(mu) = (1/2pi) sum_j w_j f(nu_j) v_n(arccos(mu . nu_j)) over the grid.
inline double vpm_grid_at(const GridFunction& f, const kernel::KernelSpec& spec, const Vec3& mu)
{
    if (spec.d != 3)
        throw usage_error("vpm_grid: the grid pathway exists only for d = 3");
    const auto& grid = *f.grid;
    quad::CompensatedSum acc;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double c = cos_arc(mu, grid.point(j));
        // v_n(arccos c) = ((1 + c)/2)^n / I_{n,3}
        const double kernel_value = std::exp(spec.n * std::log(std::max(0.5 * (1.0 + c), 0.0)) - spec.log_norm);
        acc.add(grid.weight(j) * f.values[j] * (spec.n == 0 ? std::exp(-spec.log_norm) : kernel_value));
    }
    return acc.value() / (2.0 * std::numbers::pi);
}

/// Dense O(N^2) convolution of a grid function with v_n, at every grid point.
inline GridFunction vpm_grid(const GridFunction& f, int n, const kernel::KernelSpec& spec)
{
    if (spec.n != n)
        throw usage_error("vpm_grid: kernel spec degree does not match n");
    GridFunction out;
    out.grid = f.grid;
    out.values.resize(f.values.size());
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = vpm_grid_at(f, spec, f.grid->point(i));
    return out;
}

} // namespace vpm::ops
