#pragma once

// Verification suites. Each suite produces an ExperimentReport: a table with a
// fixed column schema, named sub-checks, measured envelope constants and the
// metadata needed to reproduce it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "vpm/errors.hpp"
#include "vpm/function_space.hpp"
#include "vpm/geometry.hpp"
#include "vpm/kernel.hpp"
#include "vpm/operators.hpp"
#include "vpm/quadrature.hpp"
#include "vpm/smoothness.hpp"
#include "vpm/special_fn.hpp"

namespace vpm::experiments {

using json = nlohmann::json;

inline constexpr const char* tool_version = "0.1.0";

// ---------------------------------------------------------------------------
// Settings

struct Thresholds {
    double multiplier_tol = 1e-9;
    double lemma_window = 2.0;
    double voronovskaya_window = 3.0;
    double n_alpha_lo = 0.5;
    double n_alpha_hi = 2.0;
    double converse_window = 25.0;
    double equivalence_window = 50.0;
    double chain_slack = 1e-8;
};

inline std::vector<int> dyadic_n_list() { return {4, 8, 16, 32, 64, 128, 256}; }

/// Everything a suite reads. Two runs with equal settings produce identical tables.
struct Settings {
    int d = 3;
    std::vector<int> n_list = dyadic_n_list();
    std::vector<double> p_list = {1.0, 2.0, p_inf};
    std::vector<std::string> corpus = default_corpus_ids();
    int quadrature_order = 0; // 0: per-cell default n + k + 32
    int theta_grid_size = smooth::default_theta_grid_size;
    std::uint64_t seed = 42;
    int n_max = 32; // multiplier suite
    int k_cap = 0;  // delayed-max suite; 0: 2 max(n_list)
    Thresholds thresholds;
};

/// Largest operator degree the band-limited suites accept.
inline constexpr int band_budget_n = 256;

/// Projection degree for non-band-limited profiles: 4 n_max + 64.
inline int projection_band_limit(int n_max) { return 4 * n_max + 64; }

inline json p_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

inline json to_json(const Settings& s)
{
    json p = json::array();
    for (double v : s.p_list)
        p.push_back(p_json(v));
    const auto& t = s.thresholds;
    return json{{"d", s.d},
                {"n_list", s.n_list},
                {"p_list", p},
                {"corpus", s.corpus},
                {"quadrature_order", s.quadrature_order > 0 ? json(s.quadrature_order) : json("auto")},
                {"theta_grid_size", s.theta_grid_size},
                {"seed", s.seed},
                {"n_max", s.n_max},
                {"k_cap", s.k_cap},
                {"thresholds",
                 {{"multiplier_tol", t.multiplier_tol},
                  {"lemma_window", t.lemma_window},
                  {"voronovskaya_window", t.voronovskaya_window},
                  {"n_alpha_lo", t.n_alpha_lo},
                  {"n_alpha_hi", t.n_alpha_hi},
                  {"converse_window", t.converse_window},
                  {"equivalence_window", t.equivalence_window},
                  {"chain_slack", t.chain_slack}}}};
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hash of the canonical (key-sorted, compact) JSON form of the settings.
inline std::string config_hash(const Settings& s)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(s).dump())));
    return buf;
}

// ---------------------------------------------------------------------------
// Report

/// A table cell: empty, integer, real or text.
using Value = std::variant<std::monostate, long long, double, std::string>;

inline std::string format_real(double v)
{
    if (std::isnan(v))
        return "";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_value(const Value& v)
{
    struct {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(long long x) const { return std::to_string(x); }
        std::string operator()(double x) const { return format_real(x); }
        std::string operator()(const std::string& x) const
        {
            if (x.find_first_of(",\"\n") == std::string::npos)
                return x;
            std::string out = "\"";
            for (char c : x) {
                if (c == '"')
                    out += '"';
                out += c;
            }
            return out + "\"";
        }
    } visitor;
    return std::visit(visitor, v);
}

inline json value_json(const Value& v)
{
    if (std::holds_alternative<long long>(v))
        return std::get<long long>(v);
    if (std::holds_alternative<double>(v)) {
        const double x = std::get<double>(v);
        if (std::isnan(x))
            return nullptr;
        if (std::isinf(x))
            return x > 0 ? "inf" : "-inf";
        return x;
    }
    if (std::holds_alternative<std::string>(v))
        return std::get<std::string>(v);
    return nullptr;
}

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double bound = 0.0;
};

struct ExperimentReport {
    std::string suite;
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;
    std::vector<Check> checks;
    json measured = json::object();
    std::vector<std::string> notes;

    // metadata
    json config;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version = tool_version;
    std::string timestamp;

    bool passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }

    void add_check(std::string name, bool ok, double value, double bound)
    {
        checks.push_back({std::move(name), ok, value, bound});
    }

    void add_row(std::vector<Value> row)
    {
        if (row.size() != columns.size())
            throw usage_error("report row has " + std::to_string(row.size()) + " cells, expected "
                              + std::to_string(columns.size()));
        rows.push_back(std::move(row));
    }

    int column(std::string_view name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name)
                return static_cast<int>(i);
        return -1;
    }

    /// Stable sort by (function_id, p, n, k), using whichever of these columns exist.
    void sort_rows()
    {
        std::vector<int> keys;
        for (const char* c : {"function_id", "p", "n", "k"})
            if (int i = column(c); i >= 0)
                keys.push_back(i);
        auto rank = [](const Value& v) -> std::pair<int, double> {
            if (std::holds_alternative<long long>(v))
                return {1, static_cast<double>(std::get<long long>(v))};
            if (std::holds_alternative<double>(v))
                return {1, std::get<double>(v)};
            return {std::holds_alternative<std::string>(v) ? 2 : 0, 0.0};
        };
        std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
            for (int i : keys) {
                const auto ra = rank(a[i]);
                const auto rb = rank(b[i]);
                if (ra.first == 2 && rb.first == 2) {
                    const auto& sa = std::get<std::string>(a[i]);
                    const auto& sb = std::get<std::string>(b[i]);
                    if (sa != sb)
                        return sa < sb;
                } else if (ra != rb) {
                    return ra < rb;
                }
            }
            return false;
        });
    }

    /// Metadata comment lines (without the timestamp), header and rows.
    std::string csv_body() const
    {
        std::string out;
        out += "# suite: " + suite + "\n";
        out += "# version: " + version + "\n";
        out += "# config_hash: " + config_hash + "\n";
        out += "# seed: " + std::to_string(seed) + "\n";
        out += "# config: " + config.dump() + "\n";
        for (const auto& n : notes)
            out += "# note: " + n + "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out += (i ? "," : "") + columns[i];
        out += "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out += (i ? "," : "") + format_value(row[i]);
            out += "\n";
        }
        return out;
    }

    /// Full CSV: a leading timestamp line, then csv_body().
    std::string csv() const { return "# timestamp: " + timestamp + "\n" + csv_body(); }

    json summary() const
    {
        json c = json::array();
        for (const auto& ch : checks)
            c.push_back({{"name", ch.name},
                         {"passed", ch.passed},
                         {"value", value_json(ch.value)},
                         {"bound", value_json(ch.bound)}});
        return json{{"passed", passed()},  {"config_hash", config_hash}, {"rows", rows.size()},
                    {"checks", c},         {"measured", measured},       {"notes", notes},
                    {"timestamp", timestamp}};
    }
};

inline std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline ExperimentReport make_report(std::string suite, std::vector<std::string> columns, const Settings& s)
{
    ExperimentReport r;
    r.suite = std::move(suite);
    r.columns = std::move(columns);
    r.config = to_json(s);
    r.config_hash = config_hash(s);
    r.seed = s.seed;
    r.timestamp = utc_timestamp();
    return r;
}

/// {min, max, max/min} of the positive entries.
inline json window_json(const std::vector<double>& xs)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double x : xs) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (xs.empty())
        return json{{"min", nullptr}, {"max", nullptr}, {"spread", nullptr}};
    return json{{"min", lo}, {"max", hi}, {"spread", lo > 0 ? json(hi / lo) : json(nullptr)}};
}

inline double spread(const std::vector<double>& xs)
{
    if (xs.empty())
        return 1.0;
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    return *lo > 0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Measured constants shared with the summary

/// Smallest C with |Q_k(cos theta)| <= C min((k theta)^-lambda, 1) for 1 <= k <= k_max
/// on a uniform grid of (0, pi/2].
inline double envelope_constant(int d, int k_max = 512, int theta_points = 2048)
{
    const double lambda = special::lambda_of(d);
    std::vector<double> q(k_max + 1);
    double c = 0.0;
    for (int i = 1; i <= theta_points; ++i) {
        const double t = 0.5 * std::numbers::pi * i / theta_points;
        special::q_normalized_table(lambda, std::cos(t), std::span<double>(q));
        for (int k = 1; k <= k_max; ++k)
            c = std::max(c, std::abs(q[k]) / special::q_envelope(k, lambda, t));
    }
    return c;
}

/// max_k k (k + d - 2) omega_{n,k}^m / n.
inline double bernstein_constant(int n, int d, int m)
{
    const double lambda = special::lambda_of(d);
    double best = 0.0;
    for (int k = 1; k <= n; ++k)
        best = std::max(best, k * (k + d - 2.0) * std::pow(kernel::multiplier_weight(n, k, lambda), m) / n);
    return best;
}

// ---------------------------------------------------------------------------
// Multiplier identity

inline ExperimentReport run_multiplier_identity_suite(int d, int n_max, const Settings& s)
{
    if (n_max > 64)
        throw usage_error("multiplier suite: n_max " + std::to_string(n_max) + " exceeds the quadrature budget 64");
    if (n_max < 0)
        throw usage_error("multiplier suite: n_max must be >= 0");
    const double lambda = special::lambda_of(d);
    const double tol = s.thresholds.multiplier_tol;
    auto r = make_report("multipliers", {"d", "n", "k", "closed_form", "quadrature", "abs_diff"}, s);
    double worst = -1.0;
    int worst_n = 0, worst_k = 0;
    for (int n = 0; n <= n_max; ++n)
        for (int k = 0; k <= n + 4; ++k) {
            const double closed = kernel::multiplier_weight(n, k, lambda);
            const int order = s.quadrature_order > 0 ? s.quadrature_order : kernel::default_order(n, k);
            const double quad = kernel::multiplier_via_quadrature(n, k, d, order);
            const double diff = std::abs(closed - quad);
            if (diff > worst) {
                worst = diff;
                worst_n = n;
                worst_k = k;
            }
            r.add_row({static_cast<long long>(d), static_cast<long long>(n), static_cast<long long>(k), closed, quad,
                       diff});
        }
    r.add_check("max_abs_diff", worst <= tol, worst, tol);
    const int base = s.quadrature_order > 0 ? s.quadrature_order : kernel::default_order(worst_n, worst_k);
    const double refined = std::abs(kernel::multiplier_weight(worst_n, worst_k, lambda)
                                    - kernel::multiplier_via_quadrature(worst_n, worst_k, d, 2 * base));
    r.add_check("refinement_doubled_order", refined <= tol, refined, tol);
    r.measured = {{"max_abs_diff", worst}, {"worst_cell", {{"n", worst_n}, {"k", worst_k}}}};
    r.sort_rows();
    return r;
}

inline ExperimentReport run_multiplier_identity_suite(int d, int n_max)
{
    return run_multiplier_identity_suite(d, n_max, Settings{});
}

// ---------------------------------------------------------------------------
// Kernel lemmas

/// Exponent m of the theta^{-2/m} moment reported by the lemma suite.
inline constexpr int lemma_m = 7;

struct LemmaQuantity {
    std::string name;
    double value = 0.0;
    double rate = 1.0;
};

/// The weighted kernel moments at one n with their claimed rates, plus I_{n,d}.
inline std::vector<LemmaQuantity> lemma_quantities(int n, int d)
{
    const double lambda = special::lambda_of(d);
    const double nn = n;
    return {
        {"neg_lambda", kernel::lemma_integral(n, d, kernel::LemmaKind::neg_lambda()), std::pow(nn, lambda / 2)},
        {"neg_two_over_m:7", kernel::lemma_integral(n, d, kernel::LemmaKind::neg_two_over_m(lemma_m)),
         std::pow(nn, 1.0 / lemma_m)},
        {"fourth_moment", kernel::lemma_integral(n, d, kernel::LemmaKind::fourth_moment()), std::pow(nn, -2.0)},
        {"I_nd", std::exp(kernel::kernel_norm_constant(n, d)), std::pow(nn, -0.5 * (d - 1))},
    };
}

inline ExperimentReport run_lemma_suite(int d, std::vector<int> n_list, const Settings& s)
{
    if (n_list.empty())
        throw usage_error("lemma suite: n_list is empty");
    std::sort(n_list.begin(), n_list.end());
    auto r = make_report("lemmas", {"d", "n", "quantity", "value", "rate", "normalized"}, s);
    std::map<std::string, std::vector<double>> upper;
    const std::size_t half = n_list.size() / 2;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        const int n = n_list[i];
        for (const auto& q : lemma_quantities(n, d)) {
            const double normalized = q.value / q.rate;
            r.add_row({static_cast<long long>(d), static_cast<long long>(n), q.name, q.value, q.rate, normalized});
            if (i >= half)
                upper[q.name].push_back(normalized);
        }
    }
    json windows = json::object();
    for (const auto& [name, xs] : upper) {
        const double sp = spread(xs);
        r.add_check("window:" + name, sp <= s.thresholds.lemma_window, sp, s.thresholds.lemma_window);
        windows[name] = window_json(xs);
    }
    // Most sensitive cell: the singular moment at the largest n.
    const int n_top = n_list.back();
    const auto base = kernel::lemma_integral_refined(n_top, d, kernel::LemmaKind::neg_lambda());
    const auto fine =
        kernel::lemma_integral_refined(n_top, d, kernel::LemmaKind::neg_lambda(), 2 * kernel::default_order(n_top));
    const double rel = std::abs(fine.value - base.value) / std::abs(fine.value);
    r.add_check("refinement_doubled_order", rel <= 1e-7 && base.converged && fine.converged, rel, 1e-7);
    r.measured = {{"normalization_windows", windows}};
    r.sort_rows();
    return r;
}

// ---------------------------------------------------------------------------
// Voronovskaya

inline ExperimentReport run_voronovskaya_suite(int d, std::vector<int> n_list, const Settings& s)
{
    if (n_list.empty())
        throw usage_error("voronovskaya suite: n_list is empty");
    std::sort(n_list.begin(), n_list.end());
    const double lambda = special::lambda_of(d);
    const auto& th = s.thresholds;
    auto r = make_report("voronovskaya", {"d", "n", "k", "omega", "n_alpha", "residual", "normalized"}, s);
    std::vector<double> normalized_all;
    std::vector<double> n_alpha_all;
    double limit_gap = 0.0;
    for (int n : n_list) {
        const int order = s.quadrature_order > 0 ? s.quadrature_order : kernel::default_order(n);
        const double alpha = kernel::alpha_voronovskaya(n, d, order);
        const double na = n * alpha;
        n_alpha_all.push_back(na);
        if (n >= 64)
            limit_gap = std::max(limit_gap, std::abs(na - 1.0));
        const int k_max = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
        for (int k = 0; k <= k_max; ++k) {
            const double eig = k * (k + d - 2.0);
            const double omega = kernel::multiplier_weight(n, k, lambda);
            const double residual = std::abs(omega - 1.0 + alpha * eig);
            Value norm_cell;
            if (k >= 1) {
                const double scale = eig * eig / (static_cast<double>(n) * n);
                norm_cell = residual / scale;
                normalized_all.push_back(residual / scale);
            }
            r.add_row({static_cast<long long>(d), static_cast<long long>(n), static_cast<long long>(k), omega, na,
                       residual, norm_cell});
        }
    }
    const auto [lo, hi] = std::minmax_element(n_alpha_all.begin(), n_alpha_all.end());
    r.add_check("n_alpha_window", *lo >= th.n_alpha_lo && *hi <= th.n_alpha_hi, *hi, th.n_alpha_hi);
    r.add_check("n_alpha_floor", *lo >= th.n_alpha_lo, *lo, th.n_alpha_lo);
    const double sp = spread(normalized_all);
    r.add_check("normalized_residual_window", sp <= th.voronovskaya_window, sp, th.voronovskaya_window);
    const int n_top = n_list.back();
    const int base = s.quadrature_order > 0 ? s.quadrature_order : kernel::default_order(n_top);
    const double a1 = kernel::alpha_voronovskaya(n_top, d, base);
    const double a2 = kernel::alpha_voronovskaya(n_top, d, 2 * base, 96);
    const double rel = std::abs(a2 - a1) / std::abs(a2);
    r.add_check("refinement_doubled_order", rel <= 1e-10, rel, 1e-10);
    r.measured = {{"n_alpha_window", window_json(n_alpha_all)},
                  {"normalized_residual_window", window_json(normalized_all)},
                  {"n_alpha_gap_at_n_ge_64", limit_gap}};
    r.sort_rows();
    return r;
}

// ---------------------------------------------------------------------------
// Band-limited sweeps (converse, delayed max, modulus)

inline double degenerate_floor() { return 1e-12; }

/// The corpus projected to a common band limit, with one shared norm evaluator.
struct SpectralCorpus {
    int d = 3;
    int band_limit = 0;
    std::vector<std::string> ids;
    std::vector<ZonalSpectral> functions;
    std::shared_ptr<const NormEvaluator> evaluator;

    SpectralCorpus(int d_, const std::vector<std::string>& corpus, int band_limit_, int order = 0)
        : d(d_), band_limit(band_limit_), ids(corpus)
    {
        const double lambda = special::lambda_of(d);
        for (const auto& id : ids) {
            ZonalSpectral f = to_spectral(resolve_function(id, d), band_limit, lambda);
            if (f.band_limit() > band_limit)
                throw usage_error("corpus function '" + id + "' has degree " + std::to_string(f.band_limit())
                                  + " above the band limit " + std::to_string(band_limit));
            functions.push_back(std::move(f));
        }
        evaluator = std::make_shared<const NormEvaluator>(d, band_limit, order);
    }

    json reconstruction_errors() const
    {
        json out = json::object();
        for (std::size_t i = 0; i < ids.size(); ++i)
            out[ids[i]] = functions[i].reconstruction_error;
        return out;
    }
};

inline void check_band_budget(const std::vector<int>& n_list)
{
    for (int n : n_list) {
        if (n < 1)
            throw usage_error("every n must be >= 1");
        if (n > band_budget_n)
            throw usage_error("n = " + std::to_string(n) + " exceeds the band budget n <= "
                              + std::to_string(band_budget_n));
    }
}

/// Coefficients of V_n^m f - f.
inline std::vector<double> vpm_error_coeffs(const ZonalSpectral& f, int n, int m)
{
    const auto w = kernel::vpm_multipliers(n, f.dimension(), f.band_limit());
    std::vector<double> c(f.coeffs.size());
    for (std::size_t k = 0; k < c.size(); ++k)
        c[k] = ((m == 1 ? w.values[k] : std::pow(w.values[k], m)) - 1.0) * f.coeffs[k];
    return c;
}

/// Norms of V_n^m f - f for m in ms, all p at once: result[m_index][p_index].
inline std::vector<std::vector<double>> vpm_errors(const NormEvaluator& ev, const ZonalSpectral& f, int n,
                                                   const std::vector<int>& ms, std::span<const double> p_list)
{
    std::vector<std::vector<double>> batch;
    for (int m : ms)
        batch.push_back(vpm_error_coeffs(f, n, m));
    const auto vals = ev.values_many(batch);
    std::vector<std::vector<double>> out(ms.size(), std::vector<double>(p_list.size()));
    for (std::size_t i = 0; i < ms.size(); ++i)
        for (std::size_t j = 0; j < p_list.size(); ++j)
            out[i][j] = ev.norm_from_values(vals[i], p_list[j]);
    return out;
}

inline double scale_of(int n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

namespace detail {

struct RatioTracker {
    std::map<std::pair<std::string, std::string>, std::vector<double>> ratios;
    // Cell with the smallest non-degenerate w_n at finite p: the one most exposed to quadrature error.
    double min_w = std::numeric_limits<double>::infinity();
    std::size_t fn = 0;
    double p = 0.0;
    int n = 0;

    void track(std::size_t f_index, double p_value, int n_value, double w)
    {
        if (!std::isinf(p_value) && w > degenerate_floor() && w < min_w) {
            min_w = w;
            fn = f_index;
            p = p_value;
            n = n_value;
        }
    }
};

inline void add_ratio_checks(ExperimentReport& r, const RatioTracker& tr, double window)
{
    json windows = json::object();
    double worst = 1.0;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& [key, xs] : tr.ratios) {
        windows[key.first + "|p=" + key.second] = window_json(xs);
        worst = std::max(worst, spread(xs));
        for (double x : xs)
            min_ratio = std::min(min_ratio, x);
    }
    r.add_check("ratio_window", worst <= window, worst, window);
    r.add_check("ratio_positive", tr.ratios.empty() || min_ratio > 0.0,
                tr.ratios.empty() ? 0.0 : min_ratio, 0.0);
    r.measured["ratio_windows"] = windows;
    r.measured["worst_spread"] = worst;
}

} // namespace detail

inline ExperimentReport run_converse_suite(const std::vector<std::string>& corpus_ids,
                                           const std::vector<double>& p_list, std::vector<int> n_list, int d,
                                           const Settings& s)
{
    check_band_budget(n_list);
    if (n_list.empty() || p_list.empty())
        throw usage_error("converse suite: n_list and p_list must be nonempty");
    std::sort(n_list.begin(), n_list.end());
    const int K = projection_band_limit(n_list.back());
    const SpectralCorpus corpus(d, corpus_ids, K);
    const NormEvaluator& ev = *corpus.evaluator;
    auto r = make_report("converse", {"function_id", "p", "n", "e_n", "w_n", "ratio", "flag"}, s);
    detail::RatioTracker tr;
    double chain_excess = -std::numeric_limits<double>::infinity();
    const std::vector<int> ms{1, 2, 7};
    for (std::size_t fi = 0; fi < corpus.ids.size(); ++fi) {
        const auto& f = corpus.functions[fi];
        for (int n : n_list) {
            const auto e = vpm_errors(ev, f, n, ms, p_list);
            const auto w = smooth::modulus_all(ev, f, scale_of(n), p_list, s.theta_grid_size);
            for (std::size_t j = 0; j < p_list.size(); ++j) {
                for (std::size_t mi = 1; mi < ms.size(); ++mi)
                    chain_excess = std::max(chain_excess, e[mi][j] - ms[mi] * e[0][j]);
                const bool degenerate = w[j] <= degenerate_floor();
                const double ratio = degenerate ? std::numeric_limits<double>::quiet_NaN() : e[0][j] / w[j];
                if (!degenerate) {
                    tr.ratios[{corpus.ids[fi], p_label(p_list[j])}].push_back(ratio);
                    tr.track(fi, p_list[j], n, w[j]);
                }
                r.add_row({corpus.ids[fi], p_list[j], static_cast<long long>(n), e[0][j], w[j], ratio,
                           std::string(degenerate ? "DEGENERATE" : "")});
            }
        }
    }
    detail::add_ratio_checks(r, tr, s.thresholds.converse_window);
    r.add_check("chain_inequality", chain_excess <= s.thresholds.chain_slack, chain_excess, s.thresholds.chain_slack);

    if (std::isfinite(tr.min_w)) {
        const NormEvaluator fine(d, K, 2 * ev.order());
        const auto& f = corpus.functions[tr.fn];
        const double ps[] = {tr.p};
        const double e1 = vpm_errors(ev, f, tr.n, {1}, ps)[0][0] / smooth::modulus(ev, f, scale_of(tr.n), tr.p);
        const double e2 =
            vpm_errors(fine, f, tr.n, {1}, ps)[0][0] / smooth::modulus(fine, f, scale_of(tr.n), tr.p);
        const double rel = std::abs(e2 - e1) / std::abs(e2);
        r.add_check("refinement_doubled_order", rel <= 1e-6, rel, 1e-6);
    } else {
        r.add_check("refinement_doubled_order", true, 0.0, 1e-6);
    }
    r.measured["chain_max_excess"] = chain_excess;
    r.measured["projection_band_limit"] = K;
    r.measured["reconstruction_error"] = corpus.reconstruction_errors();
    r.sort_rows();
    return r;
}

inline ExperimentReport run_converse_suite(const Settings& s)
{
    return run_converse_suite(s.corpus, s.p_list, s.n_list, s.d, s);
}

/// Degrees k examined for the truncated max over k >= n: every k up to n + 16,
/// then a geometric progression with ratio 2^{1/8}, always ending at k_cap.
inline std::vector<int> delayed_degrees(int n, int k_cap)
{
    std::vector<int> ks;
    for (int k = n; k <= std::min(n + 16, k_cap); ++k)
        ks.push_back(k);
    double x = ks.back();
    while (ks.back() < k_cap) {
        x *= std::exp2(0.125);
        const int k = std::min(k_cap, static_cast<int>(std::ceil(x)));
        if (k > ks.back())
            ks.push_back(k);
    }
    return ks;
}

inline ExperimentReport run_delayed_max_suite(const std::vector<std::string>& corpus_ids,
                                              const std::vector<double>& p_list, std::vector<int> n_list, int k_cap,
                                              int d, const Settings& s)
{
    check_band_budget(n_list);
    if (n_list.empty() || p_list.empty())
        throw usage_error("delayed-max suite: n_list and p_list must be nonempty");
    std::sort(n_list.begin(), n_list.end());
    if (k_cap <= 0)
        k_cap = 2 * n_list.back();
    const int K = projection_band_limit(n_list.back());
    if (k_cap < n_list.back())
        throw usage_error("delayed-max suite: k_cap must be >= max(n_list)");
    if (k_cap > K)
        throw usage_error("delayed-max suite: k_cap " + std::to_string(k_cap) + " exceeds the band limit "
                          + std::to_string(K));
    const SpectralCorpus corpus(d, corpus_ids, K);
    const NormEvaluator& ev = *corpus.evaluator;
    auto r = make_report("delayed-max",
                         {"function_id", "p", "n", "max_error", "argmax_k", "w_n", "ratio", "flag"}, s);
    r.notes.push_back("max over k >= n truncated at k_cap = " + std::to_string(k_cap)
                      + "; k sampled densely up to n + 16, then geometrically");
    detail::RatioTracker tr;
    for (std::size_t fi = 0; fi < corpus.ids.size(); ++fi) {
        const auto& f = corpus.functions[fi];
        for (int n : n_list) {
            const auto ks = delayed_degrees(n, k_cap);
            std::vector<std::vector<double>> batch;
            for (int k : ks)
                batch.push_back(vpm_error_coeffs(f, k, 1));
            const auto vals = ev.values_many(batch);
            const auto w = smooth::modulus_all(ev, f, scale_of(n), p_list, s.theta_grid_size);
            for (std::size_t j = 0; j < p_list.size(); ++j) {
                double best = -1.0;
                int arg = n;
                for (std::size_t i = 0; i < ks.size(); ++i) {
                    const double e = ev.norm_from_values(vals[i], p_list[j]);
                    if (e > best) {
                        best = e;
                        arg = ks[i];
                    }
                }
                const bool degenerate = w[j] <= degenerate_floor();
                const double ratio = degenerate ? std::numeric_limits<double>::quiet_NaN() : best / w[j];
                if (!degenerate) {
                    tr.ratios[{corpus.ids[fi], p_label(p_list[j])}].push_back(ratio);
                    tr.track(fi, p_list[j], n, w[j]);
                }
                r.add_row({corpus.ids[fi], p_list[j], static_cast<long long>(n), best, static_cast<long long>(arg),
                           w[j], ratio, std::string(degenerate ? "DEGENERATE" : "TRUNCATED")});
            }
        }
    }
    detail::add_ratio_checks(r, tr, s.thresholds.converse_window);
    if (std::isfinite(tr.min_w)) {
        const NormEvaluator fine(d, K, 2 * ev.order());
        const auto& f = corpus.functions[tr.fn];
        const double ps[] = {tr.p};
        double m1 = 0.0, m2 = 0.0;
        for (int k : delayed_degrees(tr.n, k_cap)) {
            m1 = std::max(m1, vpm_errors(ev, f, k, {1}, ps)[0][0]);
            m2 = std::max(m2, vpm_errors(fine, f, k, {1}, ps)[0][0]);
        }
        const double rel = std::abs(m2 - m1) / std::abs(m2);
        r.add_check("refinement_doubled_order", rel <= 1e-6, rel, 1e-6);
    } else {
        r.add_check("refinement_doubled_order", true, 0.0, 1e-6);
    }
    r.measured["k_cap"] = k_cap;
    r.measured["projection_band_limit"] = K;
    r.sort_rows();
    return r;
}

inline ExperimentReport run_delayed_max_suite(const Settings& s)
{
    return run_delayed_max_suite(s.corpus, s.p_list, s.n_list, s.k_cap, s.d, s);
}

/// omega(f, n^{-1/2})_p against the K-functional estimate, per corpus function.
inline ExperimentReport run_modulus_suite(const std::vector<std::string>& corpus_ids,
                                          const std::vector<double>& p_list, std::vector<int> n_list, int d,
                                          const Settings& s)
{
    check_band_budget(n_list);
    if (n_list.empty() || p_list.empty())
        throw usage_error("modulus suite: n_list and p_list must be nonempty");
    std::sort(n_list.begin(), n_list.end());
    const int K = projection_band_limit(n_list.back());
    const SpectralCorpus corpus(d, corpus_ids, K);
    const NormEvaluator& ev = *corpus.evaluator;
    auto r = make_report("modulus", {"function_id", "p", "t", "modulus", "k_estimate", "ratio"}, s);
    r.notes.push_back("k_estimate is an upper bound: the infimum is taken over g = 0 and V_m^j f only");
    const double window = s.thresholds.equivalence_window;
    std::vector<double> ratios;
    double theta_refine = 0.0;
    for (std::size_t fi = 0; fi < corpus.ids.size(); ++fi) {
        const auto& f = corpus.functions[fi];
        const bool cusp = corpus.ids[fi].rfind("cusp:", 0) == 0;
        for (int n : n_list) {
            const double t = scale_of(n);
            const auto w = smooth::modulus_all(ev, f, t, p_list, s.theta_grid_size);
            const auto k = smooth::k_functional_all(ev, f, t, p_list, smooth::default_candidate_degrees(t));
            if (cusp) {
                const auto w2 = smooth::modulus_all(ev, f, t, p_list, 2 * s.theta_grid_size);
                for (std::size_t j = 0; j < p_list.size(); ++j)
                    theta_refine = std::max(theta_refine, std::abs(w2[j] - w[j]) / w2[j]);
            }
            for (std::size_t j = 0; j < p_list.size(); ++j) {
                const double ratio = smooth::safe_ratio(w[j], k[j], degenerate_floor());
                if (!std::isnan(ratio))
                    ratios.push_back(ratio);
                r.add_row({corpus.ids[fi], p_list[j], t, w[j], k[j], ratio});
            }
        }
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double x : ratios) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    r.add_check("ratio_upper", ratios.empty() || hi <= window, ratios.empty() ? 0.0 : hi, window);
    r.add_check("ratio_lower", ratios.empty() || lo >= 1.0 / window, ratios.empty() ? 0.0 : lo, 1.0 / window);
    r.add_check("theta_grid_doubling", theta_refine <= 0.01, theta_refine, 0.01);
    r.measured = {{"equivalence_ratio_window", window_json(ratios)},
                  {"theta_grid_doubling_max_change", theta_refine},
                  {"projection_band_limit", K}};
    r.sort_rows();
    return r;
}

inline ExperimentReport run_modulus_suite(const Settings& s)
{
    return run_modulus_suite(s.corpus, s.p_list, s.n_list, s.d, s);
}

// ---------------------------------------------------------------------------
// Self-test battery

/// Fast invariant checks across all modules; each row is one check.
inline ExperimentReport run_selftest(const Settings& s)
{
    auto r = make_report("selftest", {"check", "passed", "value", "bound"}, s);
    auto add = [&r](const std::string& name, double value, double bound, bool ok) {
        r.add_check(name, ok, value, bound);
        r.add_row({name, static_cast<long long>(ok ? 1 : 0), value, bound});
    };
    auto le = [&add](const std::string& name, double value, double bound) { add(name, value, bound, value <= bound); };

    {
        double c5 = 0.0;
        for (int d : {3, 4, 5})
            c5 = std::max(c5, envelope_constant(d, 256, 1024));
        le("special_fn.envelope_constant", c5, 10.0);
    }
    {
        double err = 0.0;
        for (int d : {3, 4, 5})
            for (double x : {-0.9, -0.3, 0.2, 0.75})
                for (int k = 0; k <= 24; ++k)
                    err = std::max(err, std::abs(special::gegenbauer_p(k, special::lambda_of(d), x)
                                                 / std::exp(special::log_gegenbauer_at_one(k, special::lambda_of(d)))
                                                 - special::q_normalized_x(k, special::lambda_of(d), x)));
        le("special_fn.normalized_recurrence", err, 1e-12);
    }
    {
        double err = 0.0;
        for (int order : {5, 20, 80}) {
            const auto& gl = quad::cached_gauss_legendre(order);
            for (int j = 0; j < 2 * order; j += 3) {
                quad::CompensatedSum acc;
                for (int i = 0; i < order; ++i)
                    acc.add(gl.weights[i] * std::pow(gl.nodes[i], j));
                err = std::max(err, std::abs(acc.value() - (j % 2 ? 0.0 : 2.0 / (j + 1))));
            }
        }
        le("quadrature.gauss_exactness", err, 1e-12);
    }
    {
        double err = 0.0;
        for (int d : {3, 4, 5})
            for (int n : {0, 7, 64, 512})
                err = std::max(err, std::abs(kernel::kernel_mass(n, d) - 1.0));
        le("kernel.unit_mass", err, 1e-10);
        double rel = 0.0;
        for (int n = 0; n <= 512; ++n)
            rel = std::max(rel, std::abs(std::exp(kernel::kernel_norm_constant(n, 3)) * (n + 1) / 2.0 - 1.0));
        le("kernel.closed_form_d3", rel, 1e-12);
    }
    {
        double err = 0.0;
        for (int d : {3, 4})
            for (int n = 0; n <= 12; ++n)
                for (int k = 0; k <= n + 4; ++k)
                    err = std::max(err, std::abs(kernel::multiplier_weight(n, k, special::lambda_of(d))
                                                 - kernel::multiplier_via_quadrature(n, k, d)));
        le("kernel.multiplier_identity", err, 1e-9);
    }
    {
        const double err = std::abs(kernel::alpha_voronovskaya(16, 3) - 1.0 / 17.0);
        le("kernel.alpha_closed_form_d3", err, 1e-10);
    }
    {
        double lo = 1e300, hi = 0.0;
        for (int n = 16; n <= 512; n *= 2) {
            const double b = bernstein_constant(n, 3, 7);
            lo = std::min(lo, b);
            hi = std::max(hi, b);
        }
        le("operators.bernstein_window", hi / lo, 2.0);
    }

    const int d = 3;
    const double lambda = 0.5;
    const ZonalProfile rb = resolve_function("randband:seed42", d);
    const ZonalSpectral band = to_spectral(rb, random_band_limit, lambda);
    {
        const ZonalSpectral proj = zonal_project(rb, random_band_limit, lambda);
        le("function_space.projection_round_trip", proj.reconstruction_error, 1e-9);
        double parseval = 0.0;
        for (std::size_t k = 0; k < band.coeffs.size(); ++k)
            parseval += band.coeffs[k] * band.coeffs[k] * special::q_norm_squared(static_cast<int>(k), lambda);
        parseval = std::sqrt(special::sphere_area(d - 1) * parseval);
        const double quad = lp_norm_zonal(band, 2.0, d);
        le("function_space.parseval", std::abs(parseval - quad) / quad, 1e-8);
    }
    {
        double worst = -1.0;
        for (const auto& prof : make_corpus(d)) {
            double prev = 0.0;
            for (double p : {1.0, 2.0, 4.0, p_inf}) {
                const double scaled = lp_norm_zonal(prof, p, d) * std::pow(4 * std::numbers::pi, std::isinf(p) ? 0.0 : -1.0 / p);
                worst = std::max(worst, prev - scaled);
                prev = scaled;
            }
        }
        le("function_space.holder_monotone", worst, 1e-12);
    }
    {
        auto grid = std::make_shared<const quad::SphereGrid>(64);
        const Vec3 pole = grid_pole(*grid);
        const GridFunction g = sample_zonal(grid, pole, band);
        double rel = 0.0;
        for (double p : {2.0, p_inf}) {
            const double a = lp_norm_grid(g, p);
            const double b = lp_norm_zonal(band, p, d);
            rel = std::max(rel, std::abs(a - b) / b);
        }
        le("function_space.grid_vs_zonal_norm", rel, 1e-6);

        std::mt19937_64 rng(s.seed);
        auto random_point = [&rng]() {
            std::normal_distribution<double> nd;
            return normalized(Vec3{nd(rng), nd(rng), nd(rng)});
        };
        double tr_err = 0.0;
        for (int i = 0; i < 20; ++i) {
            const Vec3 mu = random_point();
            const double theta = 0.1 + 2.9 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const double direct = ops::translate_direct(g, theta, mu, ops::default_circle_order(random_band_limit));
            const double spectral = eval_zonal(ops::translate_spectral(band, theta), cos_arc(pole, mu));
            tr_err = std::max(tr_err, std::abs(direct - spectral));
        }
        le("operators.translation_two_pathway", tr_err, 1e-8);

        auto small = std::make_shared<const quad::SphereGrid>(24);
        const Vec3 spole = grid_pole(*small);
        const GridFunction gs = sample_zonal(small, spole, band);
        const auto spec = kernel::KernelSpec::make(8, 3);
        const ZonalSpectral vn = ops::vpm_means(band, 8);
        double vp_err = 0.0;
        for (int i = 0; i < 10; ++i) {
            const Vec3 mu = random_point();
            vp_err = std::max(vp_err, std::abs(ops::vpm_grid_at(gs, spec, mu) - eval_zonal(vn, cos_arc(spole, mu))));
        }
        le("operators.vpm_two_pathway", vp_err, 1e-7);
    }
    {
        double err = 0.0;
        const auto a = ops::vpm_iterated(band, 16, 3);
        const auto b = ops::vpm_iterated(ops::vpm_iterated(band, 16, 2), 16, 1);
        for (std::size_t k = 0; k < a.coeffs.size(); ++k)
            err = std::max(err, std::abs(a.coeffs[k] - b.coeffs[k]));
        le("operators.semigroup", err, 1e-15);
    }
    {
        const NormEvaluator ev(d, 128);
        double excess = -1.0;
        double chain = -1.0;
        for (const auto& id : {"bump", "cusp:1", "randband:seed42"}) {
            const ZonalSpectral f = to_spectral(resolve_function(id, d), 128, lambda);
            for (double p : {1.0, 2.0, p_inf}) {
                const double base = ev.norm(f, p);
                for (double theta : {0.01, 0.3, 1.7})
                    excess = std::max(excess, ev.norm(ops::translate_spectral(f, theta), p) - base);
                const double e1 = ev.norm(vpm_error_coeffs(f, 16, 1), p);
                for (int m : {2, 7})
                    chain = std::max(chain, ev.norm(vpm_error_coeffs(f, 16, m), p) - m * e1);
            }
        }
        le("operators.contraction", excess, 1e-8);
        le("operators.chain_inequality", chain, 1e-8);

        const ZonalSpectral h4 = to_spectral(resolve_function("harmonic:4", d), 128, lambda);
        const double t = 0.1;
        const double expected = (1.0 - special::q_normalized(4, lambda, t)) * ev.norm(h4, 2.0);
        le("smoothness.harmonic_modulus", std::abs(smooth::modulus(ev, h4, t, 2.0) - expected) / expected, 1e-12);
        const ZonalSpectral bump = to_spectral(resolve_function("bump", d), 128, lambda);
        const double kf = smooth::k_functional_estimate(ev, bump, 0.25, 2.0, smooth::default_candidate_degrees(0.25));
        le("smoothness.k_estimate_below_norm", kf - ev.norm(bump, 2.0), 0.0);
    }
    {
        double worst = 0.0;
        for (double a : {0.5, 1.0}) {
            const auto prof = resolve_function(a == 0.5 ? "cusp:0.5" : "cusp:1", d);
            std::vector<double> ts, ws;
            for (int j = 2; j <= 8; j += 2) {
                ts.push_back(std::ldexp(1.0, -j));
                ws.push_back(smooth::modulus_direct(prof, ts.back(), p_inf, {8, 512, 128}));
            }
            worst = std::max(worst, std::abs(smooth::log_log_slope(ts, ws) - a));
        }
        le("smoothness.cusp_slope", worst, 0.15);
    }
    r.measured = {{"checks", r.checks.size()}};
    return r;
}

} // namespace vpm::experiments
