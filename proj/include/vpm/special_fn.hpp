#pragma once

// Gamma-type functions in the log domain, Gegenbauer (ultraspherical)
// polynomials and their normalization Q_k = P_k / P_k(1).

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include "vpm/errors.hpp"

namespace vpm::special {

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x)
{
    if (!(x > 0.0))
        throw domain_error("log_gamma: argument must be positive, got " + std::to_string(x));
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign); // reentrant: leaves the global signgam alone
#else
    return std::lgamma(x);
#endif
}

/// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
inline double log_beta(double a, double b)
{
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

/// Surface area |S^{m-1}| = 2 pi^{m/2} / Gamma(m/2) of the unit sphere in R^m.
inline double sphere_area(int m)
{
    if (m < 1)
        throw domain_error("sphere_area: ambient dimension must be >= 1");
    const double half = 0.5 * m;
    return 2.0 * std::exp(half * std::log(std::numbers::pi) - log_gamma(half));
}

/// Half the ambient dimension shift, lambda = (d - 2) / 2.
inline double lambda_of(int d)
{
    if (d < 3)
        throw domain_error("dimension d must be >= 3, got " + std::to_string(d));
    return 0.5 * (d - 2);
}

namespace detail {

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k)
{
    if (k > n)
        return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        const std::uint64_t num = n - k + i;
        // r * num / i stays integral at every step; guard the intermediate product.
        if (r > std::numeric_limits<std::uint64_t>::max() / num)
            throw domain_error("harmonic_dim: result overflows 64-bit range");
        r = r * num / i;
    }
    return r;
}

} // namespace detail

/// Dimension of the space of degree-k spherical harmonics on S^{d-1}.
inline std::uint64_t harmonic_dim(int k, int d)
{
    if (d < 3)
        throw domain_error("harmonic_dim: d must be >= 3");
    if (k < 0)
        throw domain_error("harmonic_dim: k must be >= 0");
    if (k == 0)
        return 1;
    // (2k+d-2)/(k+d-2) * C(k+d-2, k) written as a difference of binomials,
    // which keeps everything in exact integer arithmetic.
    const auto kk = static_cast<std::uint64_t>(k);
    const auto dd = static_cast<std::uint64_t>(d);
    const std::uint64_t upper = detail::binomial(kk + dd - 1, dd - 1);
    const std::uint64_t lower = k >= 2 ? detail::binomial(kk + dd - 3, dd - 1) : 0;
    return upper - lower;
}

namespace detail {

template <std::floating_point Real>
void check_gegenbauer_args(int k, Real lambda)
{
    if (k < 0)
        throw domain_error("Gegenbauer degree must be >= 0");
    if (!(lambda >= Real(0.5)))
        throw domain_error("Gegenbauer parameter lambda must be >= 1/2");
}

} // namespace detail

/// P_k^lambda(x) by the three-term recurrence
/// k P_k = 2(k + lambda - 1) x P_{k-1} - (k + 2 lambda - 2) P_{k-2},
/// seeded with P_0 = 1 and P_1 = 2 lambda x.
template <std::floating_point Real>
Real gegenbauer_p(int k, Real lambda, Real x)
{
    detail::check_gegenbauer_args(k, lambda);
    if (!(std::abs(x) <= Real(1)))
        throw domain_error("gegenbauer_p: |x| must be <= 1");
    if (k == 0)
        return Real(1);
    Real prev = 1;
    Real cur = 2 * lambda * x;
    for (int j = 2; j <= k; ++j) {
        const Real next = (2 * (j + lambda - 1) * x * cur - (j + 2 * lambda - 2) * prev) / j;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// ln P_k^lambda(1) = ln Gamma(k + 2 lambda) - ln k! - ln Gamma(2 lambda).
inline double log_gegenbauer_at_one(int k, double lambda)
{
    detail::check_gegenbauer_args(k, lambda);
    return log_gamma(k + 2 * lambda) - log_gamma(k + 1.0) - log_gamma(2 * lambda);
}

/// Fills out[j] = Q_j^lambda(x) for j = 0..out.size()-1.
///
/// Dividing the P-recurrence by P_{k-1}(1) gives the normalized form
/// (k + 2 lambda - 1) Q_k = 2 (k + lambda - 1) x Q_{k-1} - (k - 1) Q_{k-2},
/// which never forms the (growing) values P_k(1).
template <std::floating_point Real>
void q_normalized_table(Real lambda, Real x, std::span<Real> out)
{
    if (out.empty())
        return;
    detail::check_gegenbauer_args(0, lambda);
    if (!(std::abs(x) <= Real(1)))
        throw domain_error("q_normalized: |cos theta| must be <= 1");
    out[0] = 1;
    if (out.size() == 1)
        return;
    out[1] = x;
    for (std::size_t j = 2; j < out.size(); ++j) {
        const Real k = static_cast<Real>(j);
        out[j] = (2 * (k + lambda - 1) * x * out[j - 1] - (k - 1) * out[j - 2]) / (k + 2 * lambda - 1);
    }
}

/// Q_k^lambda(x) evaluated directly at x = cos(theta), x in [-1, 1].
template <std::floating_point Real>
Real q_normalized_x(int k, Real lambda, Real x)
{
    detail::check_gegenbauer_args(k, lambda);
    if (!(std::abs(x) <= Real(1)))
        throw domain_error("q_normalized: |cos theta| must be <= 1");
    if (k == 0)
        return Real(1);
    Real prev = 1;
    Real cur = x;
    for (int j = 2; j <= k; ++j) {
        const Real next = (2 * (j + lambda - 1) * x * cur - (j - 1) * prev) / (j + 2 * lambda - 1);
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Q_k^lambda(cos theta) = P_k^lambda(cos theta) / P_k^lambda(1), theta in [0, pi].
template <std::floating_point Real>
Real q_normalized(int k, Real lambda, Real theta)
{
    if (!(theta >= Real(0) && theta <= std::numbers::pi_v<Real>))
        throw domain_error("q_normalized: theta must lie in [0, pi]");
    if (theta == Real(0))
        return Real(1);
    return q_normalized_x(k, lambda, std::cos(theta));
}

/// min((k theta)^{-lambda}, 1): the decay envelope of |Q_k^lambda(cos theta)|.
inline double q_envelope(int k, double lambda, double theta)
{
    if (k < 1)
        throw domain_error("q_envelope: k must be >= 1");
    if (!(theta > 0.0 && theta <= std::numbers::pi))
        throw domain_error("q_envelope: theta must lie in (0, pi]");
    const double kt = k * theta;
    return kt <= 1.0 ? 1.0 : std::pow(kt, -lambda);
}

/// Squared weighted norm of the normalized Gegenbauer polynomial,
/// int_0^pi Q_k(cos t)^2 sin^{2 lambda} t dt = h_k / P_k(1)^2 with
/// h_k = pi 2^{1-2 lambda} Gamma(k + 2 lambda) / (k! (k + lambda) Gamma(lambda)^2).
inline double q_norm_squared(int k, double lambda)
{
    detail::check_gegenbauer_args(k, lambda);
    const double log_h = std::log(std::numbers::pi) + (1.0 - 2.0 * lambda) * std::numbers::ln2
                         + log_gamma(k + 2 * lambda) - log_gamma(k + 1.0) - std::log(k + lambda)
                         - 2.0 * log_gamma(lambda);
    return std::exp(log_h - 2.0 * log_gegenbauer_at_one(k, lambda));
}

} // namespace vpm::special
