#pragma once

// Command line front end: configuration parsing, subcommand dispatch and
// JSON / CSV reports.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ergozeta/dynamics.hpp"
#include "ergozeta/errors.hpp"
#include "ergozeta/observables.hpp"
#include "ergozeta/stats.hpp"
#include "ergozeta/transfer.hpp"
#include "ergozeta/zeta.hpp"

namespace ergozeta {

inline constexpr const char* kVersion = "0.1.0";

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"simulate", "clt",    "sigma2", "coboundary", "spectrum",
                                                   "seminorm", "growth", "strong-law", "decay"};
    return names;
}

struct RunConfig {
    std::string command;
    std::string obs = "zeta-re";
    double s = 0.5;
    std::size_t n = 1000;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::size_t k_max = 30;
    int m = 8;
    std::string cycle;  ///< "p/q"
    double x0 = 1.0;
    std::string map = "phi";
    std::string output;  ///< empty: standard output
    std::string format = "json";
    std::string samples_csv;
    unsigned threads = 0;
    std::vector<std::string> warnings;

    ObservableSpec observable() const { return ObservableSpec::parse(obs, s); }

    /// (alpha, beta) in effect: the flags, else default_exponents.
    std::pair<double, double> exponents() const {
        const auto [a, b] = default_exponents(observable());
        return {alpha.value_or(a), beta.value_or(b)};
    }

    RationalCycle rational_cycle() const {
        const auto slash = cycle.find('/');
        if (slash == std::string::npos) throw UsageError("--cycle must look like p/q");
        try {
            std::size_t used_p = 0, used_q = 0;
            const std::string ps = cycle.substr(0, slash), qs = cycle.substr(slash + 1);
            const auto p = std::stoull(ps, &used_p);
            const auto q = std::stoull(qs, &used_q);
            if (used_p != ps.size() || used_q != qs.size()) throw UsageError("--cycle must look like p/q");
            return periodic_cycle(p, q);
        } catch (const DomainError& e) {
            throw UsageError(std::string("--cycle: ") + e.what());
        } catch (const std::logic_error&) {
            throw UsageError("--cycle must look like p/q");
        }
    }
};

/// Raised by parse_config for --help; carries the help text.
struct HelpRequested {
    std::string text;
};

namespace detail {

inline void validate(RunConfig& c) {
    ObservableSpec spec;
    try {
        if (!(c.s > 0.0 && c.s < 1.0)) throw UsageError("--s must lie in the critical strip (0, 1)");
        spec = c.observable();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    if (spec.is_zeta() && !spec.within_clt_range())
        c.warnings.push_back("s outside (1/3, 1): the zeta central limit theorem needs s > 1/3");
    if (c.n == 0) throw UsageError("--n must be positive");
    if (c.trials == 0) throw UsageError("--trials must be positive");
    if (c.format != "json" && c.format != "csv") throw UsageError("--format must be json or csv");
    if (c.map != "phi" && c.map != "psi") throw UsageError("--map must be phi or psi");
    const std::string& cmd = c.command;
    if (cmd == "clt" && (c.n < 100 || c.trials < 100)) throw UsageError("clt needs --n >= 100 and --trials >= 100");
    if (cmd == "strong-law" && c.n < 1000) throw UsageError("strong-law needs --n >= 1000");
    if (cmd == "strong-law" && c.trials < 2) throw UsageError("strong-law needs --trials >= 2");
    if (cmd == "sigma2" && (c.k_max < 1 || c.n < 2)) throw UsageError("sigma2 needs --k-max >= 1 and --n >= 2");
    if (cmd == "decay" && (c.k_max < 2 || c.n < 2)) throw UsageError("decay needs --k-max >= 2 and --n >= 2");
    if (cmd == "spectrum" && (c.m < 1 || c.m > 14)) throw UsageError("--m must lie in [1, 14]");
    if (cmd == "coboundary") {
        if (c.cycle.empty()) throw UsageError("coboundary needs --cycle p/q");
        c.rational_cycle();
    }
    if (cmd == "seminorm") {
        const auto [a, b] = c.exponents();
        if (!(a > 0.0 && a < b && b <= 1.0)) throw UsageError("seminorm needs 0 < alpha < beta <= 1");
    }
    if (cmd == "simulate" && c.map == "psi" && !(c.x0 >= 0.0 && c.x0 <= 1.0))
        throw UsageError("--x0 must lie in [0, 1] for the psi map");
}

}  // namespace detail

/**
 * Parses `command [flags]`. Flags override keys of the --config file, which
 * override the defaults; unknown flags and unknown file keys are usage errors.
 */
inline RunConfig parse_config(int argc, const char* const* argv) {
    RunConfig c;
    CLI::App app{"Numerical experiments on Birkhoff sums of zeta along the Boolean-type map", "ergozeta"};
    app.set_version_flag("--version", kVersion);
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_config("--config", "", "flat key=value configuration file");
    app.add_option("command", c.command, "subcommand")->required()->check(CLI::IsMember(subcommands()));
    app.add_option("--obs", c.obs, "observable: zeta-re, zeta-im, zeta-abs, const:<c>, digit, cos, power:<w>, ...");
    app.add_option("--s", c.s, "real part of the zeta argument");
    app.add_option("--n", c.n, "orbit length, or sample count for sigma2 and decay");
    app.add_option("--trials", c.trials, "independent trials");
    app.add_option("--seed", c.seed, "random seed");
    app.add_option("--alpha", c.alpha, "seminorm alpha");
    app.add_option("--beta", c.beta, "seminorm beta");
    app.add_option("--k-max", c.k_max, "largest covariance lag");
    app.add_option("--m", c.m, "Ulam resolution exponent");
    app.add_option("--cycle", c.cycle, "periodic point p/q with q odd");
    app.add_option("--x0", c.x0, "orbit start for simulate");
    app.add_option("--map", c.map, "phi or psi for simulate");
    app.add_option("--output", c.output, "report path (default: standard output)");
    app.add_option("--format", c.format, "json or csv");
    app.add_option("--samples-csv", c.samples_csv, "write normalized clt samples here");
    app.add_option("--threads", c.threads, "worker threads (0: ERGOZETA_THREADS or all cores)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::CallForVersion&) {
        throw HelpRequested{std::string(kVersion) + "\n"};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    detail::validate(c);
    return c;
}

inline nlohmann::json config_json(const RunConfig& c) {
    const auto [a, b] = c.exponents();
    return {{"command", c.command}, {"obs", c.obs},       {"s", c.s},         {"n", c.n},
            {"trials", c.trials},   {"seed", c.seed},     {"alpha", a},       {"beta", b},
            {"k_max", c.k_max},     {"m", c.m},           {"cycle", c.cycle}, {"x0", c.x0},
            {"map", c.map},         {"output", c.output}, {"format", c.format},
            {"samples_csv", c.samples_csv},               {"threads", c.threads}};
}

/// Outcome of one subcommand: the report and the exit status it implies.
struct RunResult {
    nlohmann::json report;
    int exit_code = 0;
};

namespace detail {

inline nlohmann::json seminorm_json(const SeminormEstimate& e) {
    return {{"alpha", e.alpha},
            {"beta", e.beta},
            {"schedule", e.schedule},
            {"per_epsilon", e.per_epsilon},
            {"value", e.infinite ? nlohmann::json(nullptr) : nlohmann::json(e.value)},
            {"infinite", e.infinite},
            {"tail_slope", e.tail_slope},
            {"tail_median", e.tail_median()},
            {"tail_max", e.tail_max()},
            {"grid_points", e.grid_points},
            {"points_per_ball", e.points_per_ball}};
}

inline nlohmann::json correlation_json(const CorrelationReport& r) {
    nlohmann::json j = {{"covariance", r.covariance},   {"standard_error", r.standard_error},
                        {"usable_lags", r.usable_lags}, {"fit_available", r.fit_available},
                        {"samples", r.samples}};
    j["theta"] = r.fit_available ? nlohmann::json(r.theta) : nlohmann::json(nullptr);
    j["amplitude"] = r.fit_available ? nlohmann::json(r.amplitude) : nlohmann::json(nullptr);
    return j;
}

inline void write_samples(const std::string& path, const std::vector<double>& values) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot open " + path + " for writing");
    out.precision(17);
    out << "normalized_sn\n";
    for (double v : values) out << v << '\n';
}

}  // namespace detail

/// Runs the configured subcommand and assembles the report (without writing it).
inline RunResult execute(const RunConfig& c) {
    RunResult out;
    nlohmann::json results = nlohmann::json::object();
    std::size_t evaluations = 0, flagged = 0;
    const ObservableSpec spec = c.observable();
    ZetaConfig zcfg;

    if (c.command == "simulate") {
        const MapKind map = c.map == "phi" ? MapKind::Phi : MapKind::Psi;
        const std::vector<double> path = orbit(c.x0, c.n, map);
        results["orbit"] = path;
        if (map == MapKind::Phi) {
            std::vector<double> values;
            for (double x : path) {
                const EvalResult r = eval_h(spec, x, zcfg);
                values.push_back(r.value);
                flagged += r.degraded ? 1 : 0;
            }
            evaluations = values.size();
            results["observable"] = values;
        }
    } else if (c.command == "clt") {
        const CltReport r = clt_experiment(spec, c.n, c.trials, c.seed, c.threads, zcfg);
        results = {{"n", r.n},
                   {"trials", r.trials},
                   {"mean", r.mean},
                   {"variance", r.variance},
                   {"sigma2_empirical", r.sigma2_empirical},
                   {"sigma2_standard_error", r.sigma2_standard_error},
                   {"ks_distance", r.ks.mid},
                   {"ks_distance_classical", r.ks.classical},
                   {"degenerate", r.degenerate},
                   {"mass_within_0_1", r.mass_within},
                   {"normalized_min", r.normalized_min},
                   {"normalized_max", r.normalized_max}};
        evaluations = r.evaluations;
        flagged = r.flagged;
        if (!c.samples_csv.empty()) detail::write_samples(c.samples_csv, r.normalized);
    } else if (c.command == "sigma2") {
        const Sigma2Estimate r = sigma2_series(spec, c.k_max, c.n, c.seed, c.threads, zcfg);
        results = {{"sigma2_series", r.value},
                   {"standard_error", r.standard_error},
                   {"truncation_tail", r.truncation_tail}};
        if (c.k_max >= 2) results["correlations"] = detail::correlation_json(r.correlations);
        evaluations = r.evaluations;
        flagged = r.flagged;
    } else if (c.command == "coboundary") {
        const RationalCycle cycle = c.rational_cycle();
        const CoboundaryReport r = coboundary_cycle_sum(spec, cycle, zcfg);
        std::vector<std::string> points;
        for (const auto& p : cycle.points) points.push_back(p.str());
        results = {{"cycle", points},
                   {"period", cycle.period()},
                   {"phi_points", cycle.phi_points()},
                   {"cycle_sum", r.cycle_sum},
                   {"nonzero", r.nonzero}};
        evaluations = cycle.period();
        flagged = r.flagged;
    } else if (c.command == "spectrum") {
        const UlamMatrix p = ulam_matrix(c.m);
        const SpectralReport r = spectrum(p);
        results = {{"m", c.m},
                   {"size", p.size()},
                   {"moduli", r.moduli},
                   {"lambda1", r.moduli[0]},
                   {"gap", r.gap},
                   {"leading_vector", r.leading_vector},
                   {"iterations", r.iterations}};
        results["nilpotency_index"] =
            r.nilpotency_index ? nlohmann::json(*r.nilpotency_index) : nlohmann::json(nullptr);
    } else if (c.command == "seminorm") {
        const auto [a, b] = c.exponents();
        SeminormOptions opts;
        opts.threads = c.threads;
        const SeminormEstimate e = seminorm_estimate(as_pullback(spec, zcfg), a, b, opts);
        results = detail::seminorm_json(e);
    } else if (c.command == "growth") {
        const std::vector<double> grid = default_growth_grid();
        const GrowthCheck g = growth_check(spec, grid, zcfg);
        results = {{"value_exponent", g.value_exponent},
                   {"derivative_exponent", g.derivative_exponent},
                   {"threshold", g.threshold},
                   {"declared_w", spec.w},
                   {"pass", g.pass}};
        if (spec.is_zeta()) {
            for (int k = 0; k <= 1; ++k) {
                const GrowthFit f = growth_exponent_fit(spec.s, grid, k, zcfg);
                results["zeta_fit"].push_back({{"k", k}, {"exponent", f.exponent}, {"log_constant", f.log_constant}});
            }
        }
    } else if (c.command == "strong-law") {
        const StrongLawReport r = strong_law_check(spec, c.n, c.trials, c.seed, c.threads, zcfg);
        results = {{"birkhoff_mean", r.birkhoff_mean},
                   {"standard_error", r.standard_error},
                   {"quadrature_mean", r.quadrature_mean},
                   {"quadrature_error", r.quadrature_error},
                   {"z", r.z}};
        evaluations = r.evaluations;
        flagged = r.flagged;
    } else if (c.command == "decay") {
        const CorrelationReport r = correlation_decay(spec, c.k_max, c.n, c.seed, c.threads, zcfg);
        results = detail::correlation_json(r);
        evaluations = r.evaluations;
        flagged = r.flagged;
    } else {
        throw UsageError("unknown subcommand '" + c.command + "'");
    }

    const double fraction =
        evaluations == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(evaluations);
    const bool clean = fraction < 1e-3;
    out.report = {{"command", c.command},
                  {"config", config_json(c)},
                  {"results", results},
                  {"diagnostics",
                   {{"evaluations", evaluations},
                    {"flagged", flagged},
                    {"flagged_fraction", fraction},
                    {"clean", clean},
                    {"warnings", c.warnings}}},
                  {"version", kVersion}};
    out.exit_code = clean ? 0 : 2;
    return out;
}

namespace detail {

inline void flatten(const nlohmann::json& j, const std::string& prefix, std::ostream& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
    } else {
        out << prefix << ',' << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
    }
}

}  // namespace detail

/// Report text in the configured format.
inline std::string render(const RunConfig& c, const nlohmann::json& report) {
    if (c.format == "json") return report.dump(2) + "\n";
    std::ostringstream out;
    out << "key,value\n";
    detail::flatten(report, "", out);
    return out.str();
}

/// Executes, writes the report and returns the process exit code.
inline int run(const RunConfig& c, std::ostream& err = std::cerr) {
    try {
        for (const auto& w : c.warnings) err << "warning: " << w << '\n';
        const RunResult r = execute(c);
        const std::string text = render(c, r.report);
        if (c.output.empty()) {
            std::cout << text;
        } else {
            std::ofstream file(c.output);
            if (!file) throw UsageError("cannot open " + c.output + " for writing");
            file << text;
        }
        if (r.exit_code == 2) err << "error: flagged zeta evaluations exceed 0.1% of all evaluations\n";
        return r.exit_code;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace ergozeta
