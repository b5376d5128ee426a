#pragma once

// Gauss-Legendre rules, weighted integrals over the polar angle and a
// product quadrature grid on S^2.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "vpm/errors.hpp"

namespace vpm::quad {

/// Neumaier-compensated accumulator. Summation order is the call order, so
/// results are reproducible bit for bit.
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double accurate_sum(std::span<const double> xs)
{
    CompensatedSum s;
    for (double x : xs)
        s.add(x);
    return s.value();
}

struct QuadratureRule {
    std::vector<double> nodes;   // strictly increasing in (-1, 1)
    std::vector<double> weights; // positive, summing to 2
    int order() const { return static_cast<int>(nodes.size()); }
};

/// The order-point Gauss-Legendre rule on [-1, 1].
///
/// Roots of P_order are found by Newton iteration from Tricomi's asymptotic
/// guesses; only the positive half is iterated and mirrored.
inline QuadratureRule gauss_legendre(int order)
{
    if (order < 1)
        throw domain_error("gauss_legendre: order must be >= 1");
    const int n = order;
    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);

    const int half = (n + 1) / 2;
    for (int i = 1; i <= half; ++i) {
        const double base = std::numbers::pi * (4.0 * i - 1.0) / (4.0 * n + 2.0);
        double x = (1.0 - (n - 1.0) / (8.0 * n * n * n)) * std::cos(base);
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            if (n == 1)
                dp = 1.0;
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) <= 1e-16)
                break;
        }
        // Recompute the derivative at the converged root for the weight.
        {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // i-th largest root goes to the top of the ascending list.
        rule.nodes[n - i] = x;
        rule.weights[n - i] = w;
        rule.nodes[i - 1] = -x;
        rule.weights[i - 1] = w;
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;
    return rule;
}

/// Process-wide cache of Gauss-Legendre rules keyed by order. References stay
/// valid for the program lifetime.
inline const QuadratureRule& cached_gauss_legendre(int order)
{
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<const QuadratureRule>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end())
        it = cache.emplace(order, std::make_unique<const QuadratureRule>(gauss_legendre(order))).first;
    return *it->second;
}

/// Gauss-Legendre mapped onto theta in [0, pi] with the weight sin^{2 lambda}
/// folded into `weights`.
struct ThetaRule {
    double lambda = 0.5;
    std::vector<double> theta;
    std::vector<double> weights;
    int order() const { return static_cast<int>(theta.size()); }
};

inline ThetaRule theta_rule(int order, double lambda)
{
    const QuadratureRule& gl = cached_gauss_legendre(order);
    ThetaRule r;
    r.lambda = lambda;
    r.theta.resize(gl.nodes.size());
    r.weights.resize(gl.nodes.size());
    constexpr double half_pi = 0.5 * std::numbers::pi;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double t = half_pi * (gl.nodes[i] + 1.0);
        r.theta[i] = t;
        r.weights[i] = half_pi * gl.weights[i] * std::pow(std::sin(t), 2.0 * lambda);
    }
    return r;
}

/// int_0^pi g(theta) sin^{2 lambda}(theta) d theta by a mapped Gauss rule.
template <typename F>
double integrate_theta(F&& g, double lambda, int order)
{
    const ThetaRule r = theta_rule(order, lambda);
    CompensatedSum s;
    for (int i = 0; i < r.order(); ++i)
        s.add(r.weights[i] * g(r.theta[i]));
    return s.value();
}

/// int_0^upper h(t) dt with the same Gauss family mapped to [0, upper].
template <typename F>
double integrate_interval(F&& h, double upper, int order)
{
    const QuadratureRule& gl = cached_gauss_legendre(order);
    const double half = 0.5 * upper;
    CompensatedSum s;
    for (int i = 0; i < gl.order(); ++i)
        s.add(gl.weights[i] * h(half * (gl.nodes[i] + 1.0)));
    return half * s.value();
}

struct RefinedIntegral {
    double value = 0.0;
    int order = 0;        // order of the accepted (finer) evaluation
    bool converged = false;
};

/// Doubles the rule order until two successive values agree to `rel_tol`.
/// Used for integrands with an integrable power singularity at theta = 0.
template <typename F>
RefinedIntegral integrate_theta_refined(F&& g, double lambda, int start_order, double rel_tol = 1e-8,
                                        int max_order = 1 << 16)
{
    int order = std::max(start_order, 8);
    double prev = integrate_theta(g, lambda, order);
    while (2 * order <= max_order) {
        order *= 2;
        const double cur = integrate_theta(g, lambda, order);
        if (std::abs(cur - prev) <= rel_tol * std::abs(cur))
            return {cur, order, true};
        prev = cur;
    }
    return {prev, order, false};
}

/// Product grid on S^2: Gauss-Legendre in cos(theta) times 2*bands equispaced
/// azimuths. Point coordinates are generated on demand so that grids with
/// millions of points stay cheap to hold.
class SphereGrid {
public:
    explicit SphereGrid(int bands)
    {
        if (bands < 1)
            throw domain_error("sphere_grid: bands must be >= 1");
        const QuadratureRule& gl = cached_gauss_legendre(bands);
        azimuths_ = 2 * bands;
        const double dphi = 2.0 * std::numbers::pi / azimuths_;
        cos_polar_ = gl.nodes;
        polar_.resize(gl.nodes.size());
        sin_polar_.resize(gl.nodes.size());
        ring_weight_.resize(gl.nodes.size());
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            polar_[i] = std::acos(gl.nodes[i]);
            sin_polar_[i] = std::sqrt((1.0 - gl.nodes[i]) * (1.0 + gl.nodes[i]));
            ring_weight_[i] = gl.weights[i] * dphi;
        }
        cos_az_.resize(azimuths_);
        sin_az_.resize(azimuths_);
        for (int j = 0; j < azimuths_; ++j) {
            cos_az_[j] = std::cos(j * dphi);
            sin_az_[j] = std::sin(j * dphi);
        }
    }

    int bands() const { return static_cast<int>(polar_.size()); }
    int azimuth_count() const { return azimuths_; }
    std::size_t size() const { return polar_.size() * static_cast<std::size_t>(azimuths_); }

    /// Polar angles theta_i in (0, pi), ordered by increasing cos(theta).
    const std::vector<double>& polar_nodes() const { return polar_; }

    std::array<double, 3> point(std::size_t idx) const
    {
        const std::size_t ring = idx / azimuths_;
        const std::size_t az = idx % azimuths_;
        return {sin_polar_[ring] * cos_az_[az], sin_polar_[ring] * sin_az_[az], cos_polar_[ring]};
    }
    std::size_t index(std::size_t ring, std::size_t az) const { return ring * azimuths_ + az; }

    /// Steradian weight of a point; all points on one ring share it.
    double weight(std::size_t idx) const { return ring_weight_[idx / azimuths_]; }
    double ring_weight(std::size_t ring) const { return ring_weight_[ring]; }

    double total_weight() const
    {
        CompensatedSum s;
        for (double w : ring_weight_)
            s.add(w * azimuths_);
        return s.value();
    }

    /// sum_i w_i f(mu_i); exact for spherical polynomials of degree <= 2*bands - 1.
    template <typename F>
    double integrate(F&& f) const
    {
        CompensatedSum s;
        for (std::size_t idx = 0; idx < size(); ++idx)
            s.add(weight(idx) * f(point(idx)));
        return s.value();
    }

private:
    int azimuths_ = 0;
    std::vector<double> polar_;
    std::vector<double> cos_polar_;
    std::vector<double> sin_polar_;
    std::vector<double> ring_weight_;
    std::vector<double> cos_az_;
    std::vector<double> sin_az_;
};

inline SphereGrid sphere_grid(int bands) { return SphereGrid(bands); }

} // namespace vpm::quad
