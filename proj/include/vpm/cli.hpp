#pragma once

// Command-line driver: `vpm <suite> [options]`. Options come from flags, a
// flat INI file (--config) and VPM_OUT_DIR, in that order of precedence.
// Exit codes: 0 pass, 1 suite failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "vpm/errors.hpp"
#include "vpm/experiments.hpp"

namespace vpm::cli {

namespace fs = std::filesystem;
using experiments::json;

enum ExitCode : int { exit_pass = 0, exit_failure = 1, exit_usage = 2 };

inline const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"multipliers", "lemmas",   "voronovskaya", "converse",
                                                "delayed-max", "modulus",  "selftest",     "all"};
    return names;
}

/// Suites run by `all`, in order.
inline const std::vector<std::string>& all_suites()
{
    static const std::vector<std::string> names{"multipliers", "lemmas",  "voronovskaya", "converse",
                                                "delayed-max", "modulus", "selftest"};
    return names;
}

/// Largest n accepted by the quadrature-only suites (lemmas, voronovskaya).
inline constexpr int quadrature_budget_n = 1024;

inline const char* default_out_dir = "vpm-results";

struct RunConfig {
    std::string suite;
    experiments::Settings settings;
    std::string out_dir = default_out_dir;
};

/// Outcome of parsing: either a config to run, or an exit code with a message
/// (help text, usage error).
struct ParseResult {
    RunConfig config;
    bool run = false;
    int exit_code = exit_pass;
    std::string message;
};

namespace detail {

inline std::vector<std::string> split_list(const std::vector<std::string>& parts)
{
    std::vector<std::string> out;
    for (const auto& part : parts) {
        std::stringstream ss(part);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(" \t\"'[]");
            const auto e = item.find_last_not_of(" \t\"'[]");
            if (b != std::string::npos)
                out.push_back(item.substr(b, e - b + 1));
        }
    }
    return out;
}

inline int parse_int(const std::string& s, const std::string& what)
{
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw usage_error("invalid integer '" + s + "' for " + what);
    return static_cast<int>(v);
}

inline bool is_band_limited_suite(const std::string& suite)
{
    return suite == "converse" || suite == "delayed-max" || suite == "modulus" || suite == "all";
}

inline void validate(const RunConfig& rc)
{
    const auto& s = rc.settings;
    if (s.d < 3)
        throw usage_error("d must be >= 3 (got " + std::to_string(s.d) + ")");
    if (s.n_list.empty())
        throw usage_error("n_list is empty");
    const int budget = is_band_limited_suite(rc.suite) ? experiments::band_budget_n : quadrature_budget_n;
    for (int n : s.n_list) {
        if (n < 1)
            throw usage_error("every n must be >= 1 (got " + std::to_string(n) + ")");
        if (n > budget)
            throw usage_error("n = " + std::to_string(n) + " exceeds the band budget n <= " + std::to_string(budget)
                              + " for suite '" + rc.suite + "'");
    }
    if (s.p_list.empty())
        throw usage_error("p list is empty");
    for (double p : s.p_list)
        if (!(p == 1.0 || p == 2.0 || std::isinf(p)))
            throw usage_error("p must be one of 1, 2, inf (got " + p_label(p) + ")");
    if (s.corpus.empty())
        throw usage_error("corpus is empty");
    for (const auto& id : s.corpus) {
        try {
            resolve_function(id, s.d);
        } catch (const lookup_error& e) {
            throw usage_error(e.what());
        }
    }
    if (s.theta_grid_size < 1)
        throw usage_error("theta_grid_size must be >= 1");
    if (s.n_max < 0 || s.n_max > 64)
        throw usage_error("n_max = " + std::to_string(s.n_max) + " outside the quadrature budget 0..64");
    if (s.k_cap != 0) {
        const int max_n = *std::max_element(s.n_list.begin(), s.n_list.end());
        if (s.k_cap < max_n || s.k_cap > experiments::projection_band_limit(max_n))
            throw usage_error("k_cap must lie in [max(n_list), 4 max(n_list) + 64]");
    }
    const auto& t = s.thresholds;
    for (double w : {t.lemma_window, t.voronovskaya_window, t.converse_window, t.equivalence_window})
        if (!(w >= 1.0))
            throw usage_error("ratio windows must be >= 1");
    if (!(t.multiplier_tol > 0.0) || !(t.n_alpha_lo < t.n_alpha_hi) || !(t.chain_slack >= 0.0))
        throw usage_error("invalid threshold values");
    if (rc.out_dir.empty())
        throw usage_error("out_dir is empty");
}

} // namespace detail

/// Parses `vpm <suite> [options]`. Never throws; errors come back as exit code 2.
inline ParseResult parse_config(const std::vector<std::string>& args)
{
    ParseResult result;
    RunConfig& rc = result.config;
    auto& s = rc.settings;

    CLI::App app{"De la Vallee Poussin means on the sphere: verification suites", "vpm"};
    app.set_config("--config", "", "Flat key = value file; flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.get_formatter()->column_width(34);

    std::string suite;
    app.add_option("suite", suite, "Suite to run")->required()->check(CLI::IsMember(suite_names()));

    std::vector<std::string> n_list, p_list, corpus;
    std::string quad = "auto";
    app.add_option("--d", s.d, "Dimension d of S^{d-1} (>= 3)")->capture_default_str();
    app.add_option("--n-list,--n_list", n_list, "Comma-separated degrees n")->delimiter(',');
    app.add_option("--p,--p-list,--p_list", p_list, "Norm indices from {1,2,inf}")->delimiter(',');
    app.add_option("--corpus", corpus, "Corpus function ids")->delimiter(',');
    app.add_option("--seed", s.seed, "Seed for random test points")->capture_default_str();
    app.add_option("--out,--out-dir,--out_dir", rc.out_dir, "Output directory")
        ->envname("VPM_OUT_DIR")
        ->capture_default_str();
    app.add_option("--quad-order,--quadrature-order,--quadrature_order", quad, "Gauss order or 'auto' (n + k + 32)")
        ->capture_default_str();
    app.add_option("--theta-grid-size,--theta_grid_size", s.theta_grid_size, "Steps in the modulus sup grid")
        ->capture_default_str();
    app.add_option("--n-max,--n_max", s.n_max, "Largest n of the multiplier suite (<= 64)")->capture_default_str();
    app.add_option("--k-cap,--k_cap", s.k_cap, "Truncation of the delayed max (0: 2 max n)")->capture_default_str();

    auto& t = s.thresholds;
    app.add_option("--multiplier-tol,--multiplier_tol", t.multiplier_tol)->capture_default_str();
    app.add_option("--lemma-window,--lemma_window", t.lemma_window)->capture_default_str();
    app.add_option("--voronovskaya-window,--voronovskaya_window", t.voronovskaya_window)->capture_default_str();
    app.add_option("--n-alpha-lo,--n_alpha_lo", t.n_alpha_lo)->capture_default_str();
    app.add_option("--n-alpha-hi,--n_alpha_hi", t.n_alpha_hi)->capture_default_str();
    app.add_option("--converse-window,--converse_window", t.converse_window)->capture_default_str();
    app.add_option("--equivalence-window,--equivalence_window", t.equivalence_window)->capture_default_str();
    app.add_option("--chain-slack,--chain_slack", t.chain_slack)->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        result.exit_code = exit_pass;
        result.message = app.help();
        return result;
    } catch (const CLI::ParseError& e) {
        result.exit_code = exit_usage;
        result.message = std::string("error: ") + e.what();
        return result;
    }

    try {
        rc.suite = suite;
        if (!n_list.empty()) {
            s.n_list.clear();
            for (const auto& x : detail::split_list(n_list))
                s.n_list.push_back(detail::parse_int(x, "n_list"));
        }
        if (!p_list.empty()) {
            s.p_list.clear();
            for (const auto& x : detail::split_list(p_list))
                s.p_list.push_back(parse_p(x));
        }
        if (!corpus.empty())
            s.corpus = detail::split_list(corpus);
        s.quadrature_order = quad == "auto" ? 0 : detail::parse_int(quad, "quadrature_order");
        if (quad != "auto" && s.quadrature_order < 1)
            throw usage_error("quadrature_order must be 'auto' or a positive integer");
        detail::validate(rc);
    } catch (const std::exception& e) {
        result.exit_code = exit_usage;
        result.message = std::string("error: ") + e.what();
        return result;
    }
    result.run = true;
    return result;
}

inline ParseResult parse_config(int argc, const char* const* argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return parse_config(args);
}

// ---------------------------------------------------------------------------
// Output

/// Writes to a sibling temporary file and renames it over the target.
inline void write_atomic(const fs::path& path, const std::string& content)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush())
            throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline experiments::ExperimentReport run_suite(const std::string& suite, const experiments::Settings& s)
{
    namespace ex = experiments;
    if (suite == "multipliers")
        return ex::run_multiplier_identity_suite(s.d, s.n_max, s);
    if (suite == "lemmas")
        return ex::run_lemma_suite(s.d, s.n_list, s);
    if (suite == "voronovskaya")
        return ex::run_voronovskaya_suite(s.d, s.n_list, s);
    if (suite == "converse")
        return ex::run_converse_suite(s);
    if (suite == "delayed-max")
        return ex::run_delayed_max_suite(s);
    if (suite == "modulus")
        return ex::run_modulus_suite(s);
    if (suite == "selftest")
        return ex::run_selftest(s);
    throw usage_error("unknown suite '" + suite + "'");
}

/// Merges this run's suite results into <out>/summary.json. Results of suites
/// not run now are kept from earlier runs, each with its own config hash.
inline json build_summary(const fs::path& summary_path, const RunConfig& rc,
                          const std::vector<experiments::ExperimentReport>& reports)
{
    json summary = json::object();
    if (fs::exists(summary_path)) {
        std::ifstream in(summary_path);
        summary = json::parse(in, nullptr, false);
        if (summary.is_discarded() || !summary.is_object())
            summary = json::object();
    }
    json suites = summary.contains("suites") && summary["suites"].is_object() ? summary["suites"] : json::object();
    for (const auto& name : all_suites())
        if (!suites.contains(name))
            suites[name] = json{{"passed", nullptr}};
    for (const auto& r : reports)
        suites[r.suite] = r.summary();

    json envelope = json::object();
    envelope["C5"] = experiments::envelope_constant(rc.settings.d);
    envelope["C5_domain"] = "0 < theta <= pi/2, 1 <= k <= 512";
    envelope["C5_d"] = rc.settings.d;
    auto measured = [&suites](const char* suite, const char* key) -> json {
        const json& s = suites[suite];
        if (s.contains("measured") && s["measured"].contains(key))
            return s["measured"][key];
        return nullptr;
    };
    envelope["n_alpha_window"] = measured("voronovskaya", "n_alpha_window");
    envelope["lemma_normalization_windows"] = measured("lemmas", "normalization_windows");
    envelope["converse_ratio_windows"] = measured("converse", "ratio_windows");
    envelope["equivalence_ratio_window"] = measured("modulus", "equivalence_ratio_window");

    bool all_pass = true;
    for (const auto& r : reports)
        all_pass = all_pass && r.passed();

    summary["config_hash"] = experiments::config_hash(rc.settings);
    summary["config"] = experiments::to_json(rc.settings);
    summary["version"] = experiments::tool_version;
    summary["last_run"] = {{"suite", rc.suite}, {"passed", all_pass}};
    summary["suites"] = suites;
    summary["envelope_constants"] = envelope;
    return summary;
}

/// Runs the configured suite(s), writes <out>/<suite>.csv and <out>/summary.json.
inline int dispatch(const RunConfig& rc, std::ostream& log = std::cout, std::ostream& err = std::cerr)
{
    const fs::path out(rc.out_dir);
    try {
        fs::create_directories(out);
        const fs::path probe = out / ".vpm-write-probe";
        std::ofstream test(probe);
        if (!test)
            throw std::runtime_error("");
        test.close();
        fs::remove(probe);
    } catch (const std::exception&) {
        err << "error: out_dir '" << rc.out_dir << "' is not writable\n";
        return exit_usage;
    }

    const std::vector<std::string> suites =
        rc.suite == "all" ? all_suites() : std::vector<std::string>{rc.suite};
    std::vector<experiments::ExperimentReport> reports;
    bool failed = false;
    try {
        for (const auto& name : suites) {
            auto report = run_suite(name, rc.settings);
            write_atomic(out / (name + ".csv"), report.csv());
            log << name << ": " << (report.passed() ? "PASS" : "FAIL") << " (" << report.rows.size() << " rows)\n";
            for (const auto& c : report.checks)
                if (!c.passed)
                    log << "  failed check " << c.name << ": " << experiments::format_real(c.value) << " vs "
                        << experiments::format_real(c.bound) << "\n";
            failed = failed || !report.passed();
            reports.push_back(std::move(report));
        }
        write_atomic(out / "summary.json", build_summary(out / "summary.json", rc, reports).dump(2) + "\n");
    } catch (const usage_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const lookup_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: suite aborted: " << e.what() << "\n";
        return exit_failure;
    }
    return failed ? exit_failure : exit_pass;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr)
{
    const ParseResult parsed = parse_config(argc, argv);
    if (!parsed.run) {
        (parsed.exit_code == exit_pass ? log : err) << parsed.message << (parsed.message.empty() ? "" : "\n");
        return parsed.exit_code;
    }
    return dispatch(parsed.config, log, err);
}

} // namespace vpm::cli
