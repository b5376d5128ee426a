#pragma once

// The de la Vallee Poussin kernel v_n(theta) = cos^{2n}(theta/2) / I_{n,d}
// on S^{d-1}, its multiplier weights and the weighted moments used to bound it.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "vpm/errors.hpp"
#include "vpm/quadrature.hpp"
#include "vpm/special_fn.hpp"

namespace vpm::kernel {

namespace detail {

inline long double log_gamma_ext(long double x)
{
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgammal_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

} // namespace detail

/// ln I_{n,d} with I_{n,d} = 2^{2 lambda} Gamma(lambda + 1/2) Gamma(n + lambda + 1/2) / Gamma(n + 2 lambda + 1).
inline double kernel_norm_constant(int n, int d)
{
    if (n < 0)
        throw domain_error("kernel_norm_constant: n must be >= 0");
    const double lambda = special::lambda_of(d);
    return 2.0 * lambda * std::numbers::ln2 + special::log_gamma(lambda + 0.5)
           + special::log_gamma(n + lambda + 0.5) - special::log_gamma(n + 2.0 * lambda + 1.0);
}

/// Identity of one de la Vallee Poussin operator.
struct KernelSpec {
    int n = 0;
    int d = 3;
    double lambda = 0.5;
    double log_norm = 0.0; // ln I_{n,d}

    static KernelSpec make(int n, int d)
    {
        return KernelSpec{n, d, special::lambda_of(d), kernel_norm_constant(n, d)};
    }
};

/// v_n(theta) = exp(2n ln cos(theta/2) - ln I_{n,d}).
inline double vpm_kernel_eval(const KernelSpec& spec, double theta)
{
    if (!(theta >= 0.0 && theta <= std::numbers::pi))
        throw domain_error("vpm_kernel_eval: theta must lie in [0, pi]");
    if (spec.n == 0)
        return std::exp(-spec.log_norm);
    if (theta == std::numbers::pi)
        return 0.0;
    const double c = std::cos(0.5 * theta);
    if (c <= 0.0)
        return 0.0;
    return std::exp(2.0 * spec.n * std::log(c) - spec.log_norm);
}

/// Default Gauss order for integrals of v_n against Q_k: n + k + 32.
inline int default_order(int n, int k = 0) { return n + k + 32; }

/// omega_{n,k} = n! (n + 2 lambda)! / ((n - k)! (n + k + 2 lambda)!) for k <= n, else 0.
///
/// The four log-gamma terms are combined in extended precision so that the
/// cancellation between terms of size n ln n costs nothing at double precision.
inline double multiplier_weight(int n, int k, double lambda)
{
    if (n < 0 || k < 0)
        throw domain_error("multiplier_weight: n and k must be >= 0");
    if (k > n)
        return 0.0;
    if (k == 0)
        return 1.0;
    const long double l = lambda;
    const long double log_w = detail::log_gamma_ext(n + 1.0L) + detail::log_gamma_ext(n + 2.0L * l + 1.0L)
                              - detail::log_gamma_ext(n - k + 1.0L) - detail::log_gamma_ext(n + k + 2.0L * l + 1.0L);
    return static_cast<double>(std::exp(log_w));
}

/// int_0^pi v_n(theta) Q_k(cos theta) sin^{2 lambda}(theta) d theta by quadrature.
/// order <= 0 selects the default n + k + 32.
inline double multiplier_via_quadrature(int n, int k, int d, int order = 0)
{
    if (k < 0)
        throw domain_error("multiplier_via_quadrature: k must be >= 0");
    const KernelSpec spec = KernelSpec::make(n, d);
    if (order <= 0)
        order = default_order(n, k);
    return quad::integrate_theta(
        [&](double t) { return vpm_kernel_eval(spec, t) * special::q_normalized_x(k, spec.lambda, std::cos(t)); },
        spec.lambda, order);
}

/// int_0^pi v_n sin^{2 lambda}; equals 1 by construction of I_{n,d}.
inline double kernel_mass(int n, int d, int order = 0)
{
    const KernelSpec spec = KernelSpec::make(n, d);
    if (order <= 0)
        order = default_order(n);
    return quad::integrate_theta([&](double t) { return vpm_kernel_eval(spec, t); }, spec.lambda, order);
}

/// Operators that act diagonally on the harmonic expansion.
enum class OperatorKind { vpm, vpm_power, translation, laplace_beltrami, laplace_beltrami_squared };

struct OperatorDescriptor {
    OperatorKind kind = OperatorKind::vpm;
    int d = 3;
    int n = 0;          // vpm, vpm_power
    int m = 1;          // vpm_power
    double theta = 0.0; // translation

    std::string label() const
    {
        switch (kind) {
        case OperatorKind::vpm:
            return "vpm(" + std::to_string(n) + ")";
        case OperatorKind::vpm_power:
            return "vpm_power(" + std::to_string(n) + "," + std::to_string(m) + ")";
        case OperatorKind::translation:
            return "translation(" + std::to_string(theta) + ")";
        case OperatorKind::laplace_beltrami:
            return "laplace_beltrami";
        case OperatorKind::laplace_beltrami_squared:
            return "laplace_beltrami_squared";
        }
        return "unknown";
    }
};

/// Multiplier values m_k for k = 0..K and the operator they belong to.
struct MultiplierSequence {
    std::vector<double> values;
    OperatorDescriptor source;
};

/// The sequence m_k of a diagonal operator for k = 0..band_limit.
inline MultiplierSequence multipliers(const OperatorDescriptor& op, int band_limit)
{
    if (band_limit < 0)
        throw domain_error("multipliers: band limit must be >= 0");
    const double lambda = special::lambda_of(op.d);
    MultiplierSequence seq{std::vector<double>(band_limit + 1, 0.0), op};
    switch (op.kind) {
    case OperatorKind::vpm:
    case OperatorKind::vpm_power:
        if (op.n < 0 || op.m < 1)
            throw domain_error("vpm multipliers need n >= 0 and m >= 1");
        for (int k = 0; k <= band_limit; ++k) {
            const double w = multiplier_weight(op.n, k, lambda);
            seq.values[k] = op.kind == OperatorKind::vpm ? w : std::pow(w, op.m);
        }
        break;
    case OperatorKind::translation:
        if (!(op.theta > 0.0 && op.theta < std::numbers::pi))
            throw domain_error("translation step must satisfy 0 < theta < pi");
        special::q_normalized_table(lambda, std::cos(op.theta), std::span<double>(seq.values));
        break;
    case OperatorKind::laplace_beltrami:
    case OperatorKind::laplace_beltrami_squared:
        for (int k = 0; k <= band_limit; ++k) {
            const double eig = -static_cast<double>(k) * (k + op.d - 2);
            seq.values[k] = op.kind == OperatorKind::laplace_beltrami ? eig : eig * eig;
        }
        break;
    }
    return seq;
}

inline MultiplierSequence vpm_multipliers(int n, int d, int band_limit)
{
    return multipliers(OperatorDescriptor{OperatorKind::vpm, d, n}, band_limit);
}

/// alpha(n) = int_0^pi v_n(theta) sin^{2l} theta int_0^theta sin^{-2l} t int_0^t sin^{2l} u du dt d theta.
///
/// The two inner integrals are evaluated by Gauss rules of `inner_order` on
/// [0, theta_i] and [0, t_j] at every outer node.
inline double alpha_voronovskaya(int n, int d, int order = 0, int inner_order = 48)
{
    if (n < 1)
        throw domain_error("alpha_voronovskaya: n must be >= 1");
    const KernelSpec spec = KernelSpec::make(n, d);
    if (order <= 0)
        order = default_order(n);
    const double two_lambda = 2.0 * spec.lambda;
    auto sin_pow = [two_lambda](double x) { return std::pow(std::sin(x), two_lambda); };
    auto inner = [&](double t) { return quad::integrate_interval(sin_pow, t, inner_order); };
    auto middle = [&](double theta) {
        return quad::integrate_interval([&](double t) { return inner(t) / sin_pow(t); }, theta, inner_order);
    };
    return quad::integrate_theta(
        [&](double theta) {
            const double v = vpm_kernel_eval(spec, theta);
            return v == 0.0 ? 0.0 : v * middle(theta);
        },
        spec.lambda, order);
}

/// Weighted moment selector for the kernel bounds.
struct LemmaKind {
    enum class Tag { neg_lambda, neg_two_over_m, fourth_moment };
    Tag tag = Tag::fourth_moment;
    int m = 0; // used by neg_two_over_m

    static LemmaKind neg_lambda() { return {Tag::neg_lambda, 0}; }
    static LemmaKind neg_two_over_m(int m) { return {Tag::neg_two_over_m, m}; }
    static LemmaKind fourth_moment() { return {Tag::fourth_moment, 0}; }

    /// Accepts "neg_lambda", "fourth_moment" and "neg_two_over_m:<m>".
    static LemmaKind parse(std::string_view s)
    {
        if (s == "neg_lambda")
            return neg_lambda();
        if (s == "fourth_moment")
            return fourth_moment();
        constexpr std::string_view prefix = "neg_two_over_m:";
        if (s.substr(0, prefix.size()) == prefix) {
            const std::string rest(s.substr(prefix.size()));
            std::size_t used = 0;
            int m = 0;
            try {
                m = std::stoi(rest, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == rest.size() && used > 0)
                return neg_two_over_m(m);
        }
        throw usage_error("unknown lemma integral kind '" + std::string(s) + "'");
    }

    std::string name() const
    {
        switch (tag) {
        case Tag::neg_lambda:
            return "neg_lambda";
        case Tag::neg_two_over_m:
            return "neg_two_over_m:" + std::to_string(m);
        case Tag::fourth_moment:
            return "fourth_moment";
        }
        return "unknown";
    }
};

/// int_0^pi w(theta) v_n(theta) sin^{2 lambda} theta d theta for
/// w = theta^{-lambda}, theta^{-2/m} or theta^4.
///
/// The negative powers leave an integrable endpoint singularity; the rule
/// order is doubled until two refinements agree to 1e-8 relative, starting
/// from `start_order` (n + 32 when <= 0).
inline quad::RefinedIntegral lemma_integral_refined(int n, int d, LemmaKind kind, int start_order = 0)
{
    if (n < 1)
        throw domain_error("lemma_integral: n must be >= 1");
    const KernelSpec spec = KernelSpec::make(n, d);
    double power = 4.0;
    switch (kind.tag) {
    case LemmaKind::Tag::neg_lambda:
        power = -spec.lambda;
        break;
    case LemmaKind::Tag::neg_two_over_m:
        if (kind.m < 1)
            throw usage_error("lemma_integral: neg_two_over_m needs m >= 1");
        power = -2.0 / kind.m;
        break;
    case LemmaKind::Tag::fourth_moment:
        power = 4.0;
        break;
    }
    return quad::integrate_theta_refined(
        [&](double t) { return std::pow(t, power) * vpm_kernel_eval(spec, t); }, spec.lambda,
        start_order > 0 ? start_order : default_order(n));
}

inline double lemma_integral(int n, int d, LemmaKind kind) { return lemma_integral_refined(n, d, kind).value; }

inline double lemma_integral(int n, int d, std::string_view kind) { return lemma_integral(n, d, LemmaKind::parse(kind)); }

} // namespace vpm::kernel
