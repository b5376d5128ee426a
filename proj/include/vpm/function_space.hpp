#pragma once

// Functions on S^{d-1}: zonal expansions against the normalized Gegenbauer
// system (any d), grid samples on S^2 (d = 3), L^p norms and the test corpus.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpm/errors.hpp"
#include "vpm/geometry.hpp"
#include "vpm/quadrature.hpp"
#include "vpm/special_fn.hpp"

namespace vpm {

// ---------------------------------------------------------------------------
// Norm index

/// p in [1, inf]; infinity is represented by +inf.
inline constexpr double p_inf = std::numeric_limits<double>::infinity();

inline bool is_valid_p(double p) { return p >= 1.0; }

inline std::string p_label(double p)
{
    if (std::isinf(p))
        return "inf";
    if (p == std::floor(p))
        return std::to_string(static_cast<long long>(p));
    return std::to_string(p);
}

inline double parse_p(std::string_view s)
{
    if (s == "inf" || s == "Inf" || s == "INF" || s == "infinity")
        return p_inf;
    const std::string str(s);
    std::size_t used = 0;
    double p = 0.0;
    try {
        p = std::stod(str, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != str.size() || used == 0 || !is_valid_p(p))
        throw usage_error("invalid norm index p='" + str + "' (expected a number >= 1 or 'inf')");
    return p;
}

// ---------------------------------------------------------------------------
// Representations

/// f(mu) = sum_k coeffs[k] Q_k^lambda(e . mu) about an implicit pole e.
struct ZonalSpectral {
    double lambda = 0.5;
    std::vector<double> coeffs;
    /// Sup-distance between the source profile and this expansion, when the
    /// expansion came from a projection; zero otherwise.
    double reconstruction_error = 0.0;

    int band_limit() const { return static_cast<int>(coeffs.size()) - 1; }
    int dimension() const { return static_cast<int>(std::lround(2.0 * lambda)) + 2; }
};

/// Pre-projection form of a zonal function: f(mu) = g(arc(e, mu)).
struct ZonalProfile {
    std::string id;
    std::function<double(double)> g;
    std::string smoothness_tag;
    /// Exact Gegenbauer coefficients for band-limited members.
    std::optional<std::vector<double>> exact_coeffs;
};

/// Samples on an S^2 product grid, with an optional analytic evaluator used
/// for off-grid values (circle means).
struct GridFunction {
    std::shared_ptr<const quad::SphereGrid> grid;
    std::vector<double> values;
    std::function<double(const Vec3&)> pointwise;
};

// ---------------------------------------------------------------------------
// Evaluation

/// sum_k a_k Q_k^lambda(cos_gamma).
inline double eval_zonal(const ZonalSpectral& f, double cos_gamma)
{
    if (!(std::abs(cos_gamma) <= 1.0))
        throw domain_error("eval_zonal: |cos gamma| must be <= 1");
    const auto& a = f.coeffs;
    if (a.empty())
        return 0.0;
    const double x = cos_gamma;
    const double l = f.lambda;
    quad::CompensatedSum s;
    double prev = 1.0;
    double cur = x;
    s.add(a[0]);
    if (a.size() > 1)
        s.add(a[1] * x);
    for (std::size_t j = 2; j < a.size(); ++j) {
        const double k = static_cast<double>(j);
        const double next = (2 * (k + l - 1) * x * cur - (k - 1) * prev) / (k + 2 * l - 1);
        prev = cur;
        cur = next;
        s.add(a[j] * cur);
    }
    return s.value();
}

// ---------------------------------------------------------------------------
// Norms

/// Points of the uniform theta grid used for p = infinity.
inline constexpr int sup_grid_points = 4096;

inline std::vector<double> sup_theta_grid(int points = sup_grid_points)
{
    std::vector<double> t(points);
    for (int i = 0; i < points; ++i)
        t[i] = std::numbers::pi * i / (points - 1);
    t.back() = std::numbers::pi;
    return t;
}

namespace detail {

/// (|S^{d-2}| sum_j w_j |f_j|^p)^{1/p}, p finite.
inline double weighted_lp(std::span<const double> w, std::span<const double> f, double p, double area)
{
    quad::CompensatedSum s;
    if (p == 1.0) {
        for (std::size_t j = 0; j < w.size(); ++j)
            s.add(w[j] * std::abs(f[j]));
        return area * s.value();
    }
    if (p == 2.0) {
        for (std::size_t j = 0; j < w.size(); ++j)
            s.add(w[j] * f[j] * f[j]);
        return std::sqrt(area * s.value());
    }
    for (std::size_t j = 0; j < w.size(); ++j)
        s.add(w[j] * std::pow(std::abs(f[j]), p));
    return std::pow(area * s.value(), 1.0 / p);
}

/// Dot product with eight interleaved partial sums; the summation order is
/// fixed, so results are reproducible, and the compiler can vectorize it.
inline double dot(const double* a, const double* b, std::size_t n)
{
    double acc[8] = {};
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8)
        for (int r = 0; r < 8; ++r)
            acc[r] += a[k + r] * b[k + r];
    double tail = 0.0;
    for (; k < n; ++k)
        tail += a[k] * b[k];
    return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

inline double max_abs(std::span<const double> f)
{
    double m = 0.0;
    for (double v : f)
        m = std::max(m, std::abs(v));
    return m;
}

} // namespace detail

/// Default Gauss order for norms of a degree-K expansion.
inline int default_norm_order(int band_limit) { return 2 * band_limit + 64; }

/// L^p norm of a zonal function given by its polar profile:
/// (|S^{d-2}| int_0^pi |g|^p sin^{d-2}) ^{1/p}; p = inf is a max over the 4096-point theta grid.
inline double lp_norm_zonal(const std::function<double(double)>& g, double p, int d, int order)
{
    if (!is_valid_p(p))
        throw usage_error("lp_norm: p must be >= 1");
    const double lambda = special::lambda_of(d);
    if (std::isinf(p)) {
        double m = 0.0;
        for (double t : sup_theta_grid())
            m = std::max(m, std::abs(g(t)));
        return m;
    }
    const quad::ThetaRule rule = quad::theta_rule(order, lambda);
    std::vector<double> f(rule.theta.size());
    for (std::size_t j = 0; j < f.size(); ++j)
        f[j] = g(rule.theta[j]);
    return detail::weighted_lp(rule.weights, f, p, special::sphere_area(d - 1));
}

inline double lp_norm_zonal(const ZonalSpectral& f, double p, int d, int order = 0)
{
    if (std::abs(f.lambda - special::lambda_of(d)) > 1e-12)
        throw usage_error("lp_norm_zonal: expansion parameter does not match d");
    if (order <= 0)
        order = default_norm_order(f.band_limit());
    return lp_norm_zonal([&](double t) { return eval_zonal(f, std::cos(t)); }, p, d, order);
}

inline double lp_norm_zonal(const ZonalProfile& f, double p, int d, int order = 4096)
{
    return lp_norm_zonal(f.g, p, d, order);
}

/// Weighted p-norm over the grid points; max for p = inf.
inline double lp_norm_grid(const GridFunction& f, double p)
{
    if (!f.grid || f.values.size() != f.grid->size())
        throw usage_error("lp_norm_grid: value count does not match grid");
    if (!is_valid_p(p))
        throw usage_error("lp_norm: p must be >= 1");
    if (std::isinf(p))
        return detail::max_abs(f.values);
    const auto& grid = *f.grid;
    quad::CompensatedSum s;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const double a = std::abs(f.values[i]);
        s.add(grid.weight(i) * (p == 1.0 ? a : p == 2.0 ? a * a : std::pow(a, p)));
    }
    return p == 1.0 ? s.value() : std::pow(s.value(), 1.0 / p);
}

/// Batched evaluation of degree-<=K expansions at a fixed node set: the Gauss
/// nodes used for finite p followed by the uniform sup grid. The Q_k table is
/// built once so that repeated norms cost one matrix-vector product each.
class NormEvaluator {
public:
    NormEvaluator(int d, int band_limit, int order = 0)
        : d_(d), lambda_(special::lambda_of(d)), band_limit_(band_limit), area_(special::sphere_area(d - 1))
    {
        if (band_limit < 0)
            throw domain_error("NormEvaluator: band limit must be >= 0");
        if (order <= 0)
            order = default_norm_order(band_limit);
        rule_ = quad::theta_rule(order, lambda_);
        const std::vector<double> sup = sup_theta_grid();
        nodes_ = rule_.theta;
        nodes_.insert(nodes_.end(), sup.begin(), sup.end());
        const std::size_t stride = band_limit_ + 1;
        table_.resize(nodes_.size() * stride);
        for (std::size_t j = 0; j < nodes_.size(); ++j)
            special::q_normalized_table(lambda_, std::cos(nodes_[j]),
                                        std::span<double>(table_.data() + j * stride, stride));
    }

    int dimension() const { return d_; }
    double lambda() const { return lambda_; }
    int band_limit() const { return band_limit_; }
    int order() const { return rule_.order(); }

    /// f at every node (Gauss nodes first, then the sup grid).
    std::vector<double> values(std::span<const double> coeffs) const
    {
        if (static_cast<int>(coeffs.size()) > band_limit_ + 1)
            throw usage_error("NormEvaluator: expansion exceeds the evaluator band limit");
        const std::size_t stride = band_limit_ + 1;
        // Trailing zeros add nothing; trimming them keeps low-degree inputs cheap.
        std::size_t len = coeffs.size();
        while (len > 0 && coeffs[len - 1] == 0.0)
            --len;
        std::vector<double> out(nodes_.size(), 0.0);
        for (std::size_t j = 0; j < nodes_.size(); ++j)
            out[j] = detail::dot(coeffs.data(), table_.data() + j * stride, len);
        return out;
    }

    /// values() for several expansions at once; each table row is read once for the whole batch.
    std::vector<std::vector<double>> values_many(const std::vector<std::vector<double>>& batch) const
    {
        const std::size_t stride = band_limit_ + 1;
        std::vector<std::size_t> len(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b) {
            if (batch[b].size() > stride)
                throw usage_error("NormEvaluator: expansion exceeds the evaluator band limit");
            len[b] = batch[b].size();
            while (len[b] > 0 && batch[b][len[b] - 1] == 0.0)
                --len[b];
        }
        std::vector<std::vector<double>> out(batch.size(), std::vector<double>(nodes_.size(), 0.0));
        for (std::size_t j = 0; j < nodes_.size(); ++j) {
            const double* q = table_.data() + j * stride;
            for (std::size_t b = 0; b < batch.size(); ++b)
                out[b][j] = detail::dot(batch[b].data(), q, len[b]);
        }
        return out;
    }

    double norm_from_values(std::span<const double> vals, double p) const
    {
        if (!is_valid_p(p))
            throw usage_error("lp_norm: p must be >= 1");
        const std::size_t nq = rule_.theta.size();
        if (std::isinf(p))
            return detail::max_abs(vals.subspan(nq));
        return detail::weighted_lp(rule_.weights, vals.first(nq), p, area_);
    }

    double norm(std::span<const double> coeffs, double p) const { return norm_from_values(values(coeffs), p); }

    double norm(const ZonalSpectral& f, double p) const
    {
        if (std::abs(f.lambda - lambda_) > 1e-12)
            throw usage_error("NormEvaluator: expansion parameter does not match d");
        return norm(f.coeffs, p);
    }

private:
    int d_;
    double lambda_;
    int band_limit_;
    double area_;
    quad::ThetaRule rule_;
    std::vector<double> nodes_;
    std::vector<double> table_;
};

// ---------------------------------------------------------------------------
// Projection

/// a_k = int g Q_k sin^{2 lambda} / int Q_k^2 sin^{2 lambda}, k = 0..K.
/// order <= 0 selects 2K + 64. The sup reconstruction error over a
/// 1024-point theta grid is stored in the result.
inline ZonalSpectral zonal_project(const ZonalProfile& profile, int band_limit, double lambda, int order = 0)
{
    if (band_limit < 0)
        throw domain_error("zonal_project: band limit must be >= 0");
    if (order <= 0)
        order = default_norm_order(band_limit);
    const quad::ThetaRule rule = quad::theta_rule(order, lambda);
    const std::size_t stride = band_limit + 1;
    std::vector<quad::CompensatedSum> acc(stride);
    std::vector<double> q(stride);
    for (int j = 0; j < rule.order(); ++j) {
        const double wg = rule.weights[j] * profile.g(rule.theta[j]);
        special::q_normalized_table(lambda, std::cos(rule.theta[j]), std::span<double>(q));
        for (std::size_t k = 0; k < stride; ++k)
            acc[k].add(wg * q[k]);
    }
    ZonalSpectral f{lambda, std::vector<double>(stride), 0.0};
    for (std::size_t k = 0; k < stride; ++k)
        f.coeffs[k] = acc[k].value() / special::q_norm_squared(static_cast<int>(k), lambda);

    double err = 0.0;
    for (double t : sup_theta_grid(1024))
        err = std::max(err, std::abs(profile.g(t) - eval_zonal(f, std::cos(t))));
    f.reconstruction_error = err;
    return f;
}

/// Spectral form of a corpus profile: exact coefficients when the profile is
/// band-limited, otherwise a projection onto degrees 0..K.
inline ZonalSpectral to_spectral(const ZonalProfile& profile, int band_limit, double lambda, int order = 0)
{
    if (profile.exact_coeffs) {
        ZonalSpectral f{lambda, *profile.exact_coeffs, 0.0};
        f.coeffs.resize(std::max<std::size_t>(f.coeffs.size(), band_limit + 1), 0.0);
        return f;
    }
    return zonal_project(profile, band_limit, lambda, order);
}

// ---------------------------------------------------------------------------
// Grid sampling (d = 3)

/// A grid point close to the equator. Used as the pole of zonal functions on
/// the grid: both the pole and its antipode are then grid points.
inline Vec3 grid_pole(const quad::SphereGrid& grid)
{
    const auto& polar = grid.polar_nodes();
    std::size_t best = 0;
    for (std::size_t i = 1; i < polar.size(); ++i)
        if (std::abs(polar[i] - 0.5 * std::numbers::pi) < std::abs(polar[best] - 0.5 * std::numbers::pi))
            best = i;
    return grid.point(grid.index(best, 0));
}

/// Samples f(mu) = g(cos(e . mu)) on every grid point; `of_cos` receives cos of the arc.
inline GridFunction sample_zonal(std::shared_ptr<const quad::SphereGrid> grid, const Vec3& pole,
                                 std::function<double(double)> of_cos)
{
    GridFunction f;
    f.grid = std::move(grid);
    f.values.resize(f.grid->size());
    for (std::size_t i = 0; i < f.values.size(); ++i)
        f.values[i] = of_cos(cos_arc(pole, f.grid->point(i)));
    f.pointwise = [pole, of_cos = std::move(of_cos)](const Vec3& mu) { return of_cos(cos_arc(pole, mu)); };
    return f;
}

inline GridFunction sample_zonal(std::shared_ptr<const quad::SphereGrid> grid, const Vec3& pole,
                                 const ZonalProfile& profile)
{
    auto g = profile.g;
    return sample_zonal(std::move(grid), pole, [g](double c) { return g(std::acos(c)); });
}

inline GridFunction sample_zonal(std::shared_ptr<const quad::SphereGrid> grid, const Vec3& pole,
                                 const ZonalSpectral& f)
{
    return sample_zonal(std::move(grid), pole, [f](double c) { return eval_zonal(f, c); });
}

// ---------------------------------------------------------------------------
// Corpus

namespace detail {

/// Uniform on [-1, 1) from the raw 64-bit engine output; independent of the
/// standard library's distribution implementation.
inline std::vector<double> random_band_coefficients(std::uint64_t seed, int band_limit)
{
    std::mt19937_64 engine(seed);
    std::vector<double> a(band_limit + 1);
    for (double& x : a) {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        x = 2.0 * u - 1.0;
    }
    return a;
}

inline double parse_number(std::string_view s, std::string_view id)
{
    const std::string str(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(str, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != str.size())
        throw lookup_error("unknown corpus function '" + std::string(id) + "'");
    return v;
}

} // namespace detail

inline constexpr int random_band_limit = 20;

/// Resolves a corpus id: "constant", "harmonic:<k>", "cusp:<alpha>", "bump",
/// "randband:seed<s>" (or "randband:<s>").
inline ZonalProfile resolve_function(std::string_view id, int d)
{
    const double lambda = special::lambda_of(d);
    const std::string sid(id);
    const auto colon = id.find(':');
    const std::string_view head = id.substr(0, colon);
    const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : id.substr(colon + 1);

    if (id == "constant")
        return {sid, [](double) { return 1.0; }, "constant", std::vector<double>{1.0}};
    if (id == "bump")
        return {sid, [](double t) { return std::exp(-4.0 * t * t); }, "smooth", std::nullopt};
    if (head == "harmonic" && !arg.empty()) {
        const double kd = detail::parse_number(arg, id);
        if (kd < 0 || kd != std::floor(kd))
            throw lookup_error("unknown corpus function '" + sid + "'");
        const int k = static_cast<int>(kd);
        std::vector<double> c(k + 1, 0.0);
        c[k] = 1.0;
        return {sid, [k, lambda](double t) { return special::q_normalized(k, lambda, t); }, "harmonic", c};
    }
    if (head == "cusp" && !arg.empty()) {
        const double a = detail::parse_number(arg, id);
        if (!(a > 0.0))
            throw lookup_error("unknown corpus function '" + sid + "'");
        return {sid, [a](double t) { return std::pow(t, a); }, "cusp", std::nullopt};
    }
    if (head == "randband" && !arg.empty()) {
        std::string_view s = arg;
        if (s.substr(0, 4) == "seed")
            s.remove_prefix(4);
        const double seed = detail::parse_number(s, id);
        if (seed < 0 || seed != std::floor(seed))
            throw lookup_error("unknown corpus function '" + sid + "'");
        auto c = detail::random_band_coefficients(static_cast<std::uint64_t>(seed), random_band_limit);
        ZonalSpectral f{lambda, c, 0.0};
        return {sid, [f](double t) { return eval_zonal(f, std::cos(t)); }, "band-limited", c};
    }
    throw lookup_error("unknown corpus function '" + sid + "'");
}

/// Default corpus ids, in report order.
inline std::vector<std::string> default_corpus_ids()
{
    return {"constant", "harmonic:1", "harmonic:4", "harmonic:16", "cusp:0.5",
            "cusp:1",   "cusp:1.5",   "bump",       "randband:seed42"};
}

inline std::vector<ZonalProfile> make_corpus(int d)
{
    std::vector<ZonalProfile> out;
    for (const auto& id : default_corpus_ids())
        out.push_back(resolve_function(id, d));
    return out;
}

} // namespace vpm
