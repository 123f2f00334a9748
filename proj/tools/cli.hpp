#pragma once

// Command-line front end: bounds, kron-search, approximate, fit, rate-study, selftest.
// run_cli() is the whole program; main() only forwards argv and the standard streams.

#include "intnet/approximator.hpp"
#include "intnet/kronecker.hpp"
#include "intnet/network.hpp"
#include "intnet/regression.hpp"
#include "intnet/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace intnet::cli {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitNotFound = 2, kExitValidation = 3, kExitPrecisionCap = 4 };

/// Validation failure carrying one message per offending field.
class FieldErrors : public std::invalid_argument {
public:
    explicit FieldErrors(std::map<std::string, std::string> fields)
        : std::invalid_argument("invalid configuration"), fields_(std::move(fields))
    {
    }
    const std::map<std::string, std::string>& fields() const { return fields_; }

private:
    std::map<std::string, std::string> fields_;
};

struct Common {
    std::uint64_t seed = 0;
    unsigned workers = default_workers();
    unsigned precision_cap = kPrecisionCap;
    std::string format = "json";
    std::string out;
};

inline void emit(const Common& common, const std::string& text, std::ostream& out)
{
    if (common.out.empty()) {
        out << text;
        return;
    }
    std::ofstream file(common.out, std::ios::binary);
    if (!file) throw std::invalid_argument("cannot write --out file '" + common.out + "'");
    file << text;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline Rational rational_from_json(const json& j)
{
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number()) return parse_rational(j.dump());
    throw std::invalid_argument("expected a number or numeric string");
}

inline BigInt big_from_json(const json& j)
{
    const Rational r = rational_from_json(j);
    if (boost::multiprecision::denominator(r) != 1) throw std::invalid_argument("expected an integer");
    return boost::multiprecision::numerator(r);
}

inline BigInt parse_big(const std::string& s, const char* what)
{
    Rational r;
    try {
        r = parse_rational(s);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument(std::string(what) + " must be an integer");
    }
    if (boost::multiprecision::denominator(r) != 1 || r < 0)
        throw std::invalid_argument(std::string(what) + " must be a non-negative integer");
    return boost::multiprecision::numerator(r);
}

inline FunctionParams parse_function_params(const std::vector<std::string>& items)
{
    FunctionParams params;
    for (const std::string& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--param expects key=value, got '" + item + "'");
        params[item.substr(0, eq)] = rational_to_double(parse_rational(item.substr(eq + 1)));
    }
    return params;
}

// --- bounds -----------------------------------------------------------------

struct BoundsArgs {
    std::optional<std::uint64_t> N;
    std::string eps;
    std::optional<std::uint64_t> n;
    std::string beta = "1", F = "1", K = "1";
    unsigned d = 1;
};

inline int cmd_bounds(const BoundsArgs& a, const Common& common, std::ostream& out)
{
    if (a.N.has_value() == a.n.has_value())
        throw std::invalid_argument("bounds: give either --N with --eps, or --n with --beta --F --K --d");
    if (a.N) {
        if (a.eps.empty()) throw std::invalid_argument("bounds: --eps is required with --N");
        const Rational eps = parse_rational(a.eps);
        const BigInt Q = q_bound(*a.N, eps);
        if (common.format == "csv") {
            emit(common, "N,eps,q_bound,digits\n" + std::to_string(*a.N) + ',' + eps.str() + ',' + Q.str() + ',' +
                             std::to_string(decimal_digits(Q)) + '\n',
                 out);
        } else {
            emit(common, dump(json{{"kind", "corollary_bound"}, {"N", *a.N}, {"eps", rational_json(eps)},
                                   {"q_bound", big_json(Q)}}),
                 out);
        }
        return kExitOk;
    }
    const HolderSpec spec{parse_rational(a.beta), parse_rational(a.F), parse_rational(a.K)};
    const Schedule s = schedule(*a.n, spec, a.d);
    if (common.format == "csv") {
        emit(common, "n,M_n,N_n,Q_n,Q_n_digits\n" + std::to_string(*a.n) + ',' + std::to_string(s.M) + ',' +
                         std::to_string(s.N) + ',' + s.Q.str() + ',' + std::to_string(s.Q_digits) + '\n',
             out);
    } else {
        json j{{"kind", "regression_schedule"},
               {"n", *a.n},
               {"beta", rational_json(spec.beta)},
               {"F", rational_json(spec.F)},
               {"K", rational_json(spec.K)},
               {"d", a.d}};
        j.update(to_json(s));
        emit(common, dump(j), out);
    }
    return kExitOk;
}

// --- kron-search ------------------------------------------------------------

struct KronArgs {
    std::string targets;
    std::string targets_file;
    std::string eps;
    std::string cap;
    std::string strategy = "exhaustive";
    std::uint64_t sample_budget = 0;
};

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline int cmd_kron_search(const KronArgs& a, const Common& common, std::ostream& out)
{
    if (a.targets.empty() == a.targets_file.empty())
        throw std::invalid_argument("kron-search: give exactly one of --targets or --targets-file");
    if (a.eps.empty()) throw std::invalid_argument("kron-search: --eps is required");
    const TargetVector targets(parse_decimal_array(a.targets.empty() ? read_file(a.targets_file) : a.targets));
    SearchConfig cfg;
    cfg.eps = parse_rational(a.eps);
    cfg.q_cap = a.cap.empty() ? q_bound(targets.size(), cfg.eps) : parse_big(a.cap, "--cap");
    cfg.strategy = parse_strategy(a.strategy);
    cfg.seed = common.seed;
    cfg.sample_budget = a.sample_budget;
    cfg.workers = common.workers;

    const SearchOutcome outcome = search_q(targets, cfg);
    json config{{"N", targets.size()},
                {"eps", rational_json(cfg.eps)},
                {"q_cap", big_json(cfg.q_cap)},
                {"strategy", a.strategy},
                {"seed", cfg.seed},
                {"sample_budget", cfg.sample_budget},
                {"precision_cap", common.precision_cap}};
    json targets_json = json::array();
    for (const Rational& b : targets.values()) targets_json.push_back(b.str());
    config["targets"] = std::move(targets_json);

    json result = std::visit([](const auto& r) { return to_json(r); }, outcome);
    result["config"] = std::move(config);
    emit(common, dump(result), out);
    return std::holds_alternative<SearchResult>(outcome) ? kExitOk : kExitNotFound;
}

// --- approximate ------------------------------------------------------------

struct ApproxArgs {
    std::string function;
    std::vector<std::string> params;
    std::string beta = "1", F = "1", K = "1", eps;
    unsigned d = 1;
    std::string cap;
    std::string strategy = "exhaustive";
    std::uint64_t sample_budget = 0;
    unsigned resolution = 0;
    std::string grid_csv;
};

inline int cmd_approximate(const ApproxArgs& a, const Common& common, std::ostream& out)
{
    if (a.eps.empty()) throw std::invalid_argument("approximate: --eps is required");
    const TargetFunction f = make_function(a.function, parse_function_params(a.params));
    const HolderSpec spec{parse_rational(a.beta), parse_rational(a.F), parse_rational(a.K)};
    spec.validate();
    const Rational eps = parse_rational(a.eps);
    if (eps <= 0) throw std::invalid_argument("approximate: --eps must be positive");

    SearchConfig search;
    const std::uint64_t N = cell_count(mesh_size(eps, spec), a.d);
    search.q_cap = a.cap.empty() ? q_bound(N, eps / (4 * spec.K)) : parse_big(a.cap, "--cap");
    search.strategy = parse_strategy(a.strategy);
    search.seed = common.seed;
    search.sample_budget = a.sample_budget;
    search.workers = common.workers;

    BuildOptions options;
    options.grid_resolution = a.resolution;
    const auto built = build_approximant(f, spec, a.d, eps, search, options);

    json config{{"function", a.function},
                {"params", f.params},
                {"beta", rational_json(spec.beta)},
                {"F", rational_json(spec.F)},
                {"K", rational_json(spec.K)},
                {"d", a.d},
                {"eps", rational_json(eps)},
                {"q_cap", big_json(search.q_cap)},
                {"strategy", a.strategy},
                {"seed", search.seed},
                {"precision_cap", common.precision_cap}};

    if (const auto* nf = std::get_if<NotFound>(&built)) {
        json j = to_json(*nf);
        j["config"] = std::move(config);
        emit(common, dump(j), out);
        return kExitNotFound;
    }
    const Approximation& approx = std::get<Approximation>(built);
    json j{{"status", "found"}, {"report", to_json(approx.report)}, {"config", std::move(config)}};
    emit(common, dump(j), out);
    if (!a.grid_csv.empty()) {
        std::ofstream csv(a.grid_csv, std::ios::binary);
        if (!csv) throw std::invalid_argument("cannot write --grid-csv file '" + a.grid_csv + "'");
        write_grid_csv(csv, approx.params, f, approx.report.grid_resolution);
    }
    return kExitOk;
}

// --- fit --------------------------------------------------------------------

struct FitArgs {
    std::string data;
    std::string K = "1";
    std::uint64_t M = 0;
    std::string cap = "10000000";
    std::string strategy = "exhaustive";
    std::uint64_t sample_budget = 0;
};

inline int cmd_fit(const FitArgs& a, const Common& common, std::ostream& out)
{
    if (a.data.empty()) throw std::invalid_argument("fit: --data is required");
    if (a.M < 1) throw std::invalid_argument("fit: --M must be >= 1");
    std::ifstream in(a.data, std::ios::binary);
    if (!in) throw std::invalid_argument("fit: cannot read '" + a.data + "'");
    const Dataset ds = read_dataset_csv(in);
    const double K = rational_to_double(parse_rational(a.K));
    if (!(K > 0)) throw std::invalid_argument("fit: --K must be positive");

    ERMConfig cfg{a.M, parse_big(a.cap, "--cap"), parse_strategy(a.strategy), common.seed, a.sample_budget,
                  common.workers};
    const FitResult fit = erm_fit(ds.samples, ds.d, K, cfg);
    json j = to_json(fit);
    j["n"] = ds.samples.size();
    j["d"] = ds.d;
    j["config"] = json{{"K", a.K},          {"M", a.M},       {"q_cap", big_json(cfg.q_cap)},
                       {"strategy", a.strategy}, {"seed", cfg.seed}, {"sample_budget", cfg.sample_budget}};
    emit(common, dump(j), out);
    return kExitOk;
}

// --- rate-study -------------------------------------------------------------

/// Validates a rate-study config document, collecting every field error.
inline RateStudyConfig parse_rate_config(const json& j, const Common& common)
{
    std::map<std::string, std::string> errors;
    RateStudyConfig cfg;
    cfg.workers = common.workers;
    if (!j.is_object()) throw FieldErrors(std::map<std::string, std::string>{{"<root>", "config must be a JSON object"}});

    auto field = [&](const char* name, auto&& parse) {
        try {
            if (!j.contains(name)) throw std::invalid_argument("missing");
            parse(j.at(name));
        } catch (const std::exception& ex) {
            errors[name] = ex.what();
        }
    };
    auto optional_field = [&](const char* name, auto&& parse) {
        if (j.contains(name)) field(name, parse);
    };

    field("d", [&](const json& v) {
        if (!v.is_number_unsigned() || v.get<unsigned>() < 1) throw std::invalid_argument("must be an integer >= 1");
        cfg.d = v.get<unsigned>();
    });
    field("beta", [&](const json& v) { cfg.spec.beta = rational_from_json(v); if (cfg.spec.beta <= 0) throw std::invalid_argument("must be positive"); });
    field("F", [&](const json& v) { cfg.spec.F = rational_from_json(v); if (cfg.spec.F <= 0) throw std::invalid_argument("must be positive"); });
    field("K", [&](const json& v) { cfg.spec.K = rational_from_json(v); if (cfg.spec.K <= 0) throw std::invalid_argument("must be positive"); });
    field("function", [&](const json& v) {
        if (!v.is_object() || !v.contains("name") || !v["name"].is_string())
            throw std::invalid_argument("must be an object with a string 'name'");
        FunctionParams params;
        if (v.contains("params")) {
            if (!v["params"].is_object()) throw std::invalid_argument("'params' must be an object");
            for (const auto& [key, val] : v["params"].items()) {
                if (!val.is_number()) throw std::invalid_argument("parameter '" + key + "' must be a number");
                params[key] = val.get<double>();
            }
        }
        cfg.f0 = make_function(v["name"].get<std::string>(), params);
    });
    auto naturals = [](const json& v, std::uint64_t min) {
        if (!v.is_array() || v.empty()) throw std::invalid_argument("must be a non-empty array of integers");
        std::vector<std::uint64_t> out;
        for (const auto& e : v) {
            if (!e.is_number_unsigned() || e.get<std::uint64_t>() < min)
                throw std::invalid_argument("entries must be integers >= " + std::to_string(min));
            out.push_back(e.get<std::uint64_t>());
        }
        return out;
    };
    field("n_list", [&](const json& v) { cfg.n_list = naturals(v, 1); });
    field("seeds", [&](const json& v) { cfg.seeds = naturals(v, 0); });
    field("q_cap", [&](const json& v) {
        if (v.is_array()) {
            for (const auto& e : v) cfg.caps.push_back(big_from_json(e));
        } else {
            cfg.caps.push_back(big_from_json(v));
        }
        for (const BigInt& c : cfg.caps)
            if (c < 1) throw std::invalid_argument("caps must be >= 1");
        if (cfg.caps.empty()) throw std::invalid_argument("must not be empty");
    });
    optional_field("strategy", [&](const json& v) { cfg.strategy = parse_strategy(v.get<std::string>()); });
    optional_field("sample_budget", [&](const json& v) {
        if (!v.is_number_unsigned()) throw std::invalid_argument("must be a non-negative integer");
        cfg.sample_budget = v.get<std::uint64_t>();
    });
    optional_field("n_mc", [&](const json& v) {
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1) throw std::invalid_argument("must be an integer >= 1");
        cfg.n_mc = v.get<std::uint64_t>();
    });
    for (const auto& [key, value] : j.items()) {
        static const std::vector<std::string> known{"d", "beta", "F", "K", "function", "n_list", "seeds",
                                                    "q_cap", "strategy", "sample_budget", "n_mc"};
        if (std::find(known.begin(), known.end(), key) == known.end()) errors[key] = "unknown field";
    }
    if (errors.empty() && cfg.caps.size() != 1 && cfg.caps.size() != cfg.n_list.size())
        errors["q_cap"] = "must be a single cap or one per entry of n_list";
    if (errors.empty() && cfg.strategy == Strategy::random && cfg.sample_budget == 0)
        errors["sample_budget"] = "random strategy needs sample_budget >= 1";
    if (!errors.empty()) throw FieldErrors(std::move(errors));
    return cfg;
}

struct RateArgs {
    std::string config;
    std::string csv;
};

inline int cmd_rate_study(const RateArgs& a, const Common& common, std::ostream& out)
{
    if (a.config.empty()) throw std::invalid_argument("rate-study: --config is required");
    json doc;
    try {
        doc = json::parse(read_file(a.config));
    } catch (const json::parse_error& ex) {
        throw FieldErrors(std::map<std::string, std::string>{{"<root>", std::string("not valid JSON: ") + ex.what()}});
    }
    const RateStudyConfig cfg = parse_rate_config(doc, common);
    const RateReport report = rate_study(cfg);
    const std::string csv = rate_csv(report);
    if (common.format == "csv") {
        emit(common, csv, out);
    } else {
        json j = to_json(report);
        j["config"] = doc;
        j["config"]["precision_cap"] = common.precision_cap;
        emit(common, dump(j), out);
    }
    if (!a.csv.empty()) {
        std::ofstream file(a.csv, std::ios::binary);
        if (!file) throw std::invalid_argument("cannot write --csv file '" + a.csv + "'");
        file << csv;
    }
    return kExitOk;
}

// --- selftest ---------------------------------------------------------------

inline int cmd_selftest(const Common& common, std::ostream& out)
{
    int failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        out << (ok ? "PASS " : "FAIL ") << name << '\n';
        failures += ok ? 0 : 1;
    };
    check("sigma(5) = 2^(2/4)", sigma_exponent(5) == RootExponent{2, 4});
    check("q_bound(2, 1/2) = 34992", q_bound(2, Rational(1, 2)) == 34992);
    check("nth_root_floor(2^33, 2) = 92681", nth_root_floor(pow2(33), 2) == 92681);

    SearchConfig cfg;
    cfg.eps = Rational(1, 5);
    cfg.q_cap = 34992;
    cfg.workers = common.workers;
    const auto found = search_q(TargetVector({Rational(1, 2), Rational(1, 2)}), cfg);
    check("kron-search [0.5,0.5] eps 0.2 -> q = 6",
          std::holds_alternative<SearchResult>(found) && std::get<SearchResult>(found).q == 6);

    const NetworkParams p(1, 1.0, 1, 1);
    const Point x{0.3};
    check("forward = layerwise", forward(p, x) == forward_layerwise(p, x));
    return failures == 0 ? kExitOk : kExitFailure;
}

// --- driver -----------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Integer-weight superexpressive network toolkit"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--seed", common.seed, "Random seed");
    app.add_option("--workers", common.workers, "Worker threads (default: available parallelism)")
        ->check(CLI::PositiveNumber);
    app.add_option("--precision-cap", common.precision_cap, "Maximum fractional bits for escalation")
        ->check(CLI::PositiveNumber);
    app.add_option("--format", common.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--out", common.out, "Write output to PATH instead of stdout");

    BoundsArgs bounds;
    auto* sub_bounds = app.add_subcommand("bounds", "Corollary weight bound or regression schedule")->fallthrough();
    sub_bounds->add_option("--N", bounds.N, "Number of torus targets");
    sub_bounds->add_option("--eps", bounds.eps, "Tolerance (decimal or p/q)");
    sub_bounds->add_option("--n", bounds.n, "Sample size");
    sub_bounds->add_option("--beta", bounds.beta, "Hölder exponent");
    sub_bounds->add_option("--F", bounds.F, "Hölder constant");
    sub_bounds->add_option("--K", bounds.K, "Sup bound");
    sub_bounds->add_option("--d", bounds.d, "Input dimension");

    KronArgs kron;
    auto* sub_kron = app.add_subcommand("kron-search", "Find q covering torus targets")->fallthrough();
    sub_kron->add_option("--targets", kron.targets, "JSON array of decimals in [0,1)");
    sub_kron->add_option("--targets-file", kron.targets_file, "File holding the JSON array");
    sub_kron->add_option("--eps", kron.eps, "Tolerance");
    sub_kron->add_option("--cap", kron.cap, "Scan limit on |q| (default: the weight bound)");
    sub_kron->add_option("--strategy", kron.strategy, "exhaustive or random");
    sub_kron->add_option("--sample-budget", kron.sample_budget, "Draws for the random strategy");

    ApproxArgs approx;
    auto* sub_approx = app.add_subcommand("approximate", "Build a network approximating a registry function")
                           ->fallthrough();
    sub_approx->add_option("--function", approx.function, "zero|constant|affine|cosine|product")->required();
    sub_approx->add_option("--param", approx.params, "Function parameter key=value (repeatable)");
    sub_approx->add_option("--beta", approx.beta, "Hölder exponent");
    sub_approx->add_option("--F", approx.F, "Hölder constant");
    sub_approx->add_option("--K", approx.K, "Sup bound");
    sub_approx->add_option("--eps", approx.eps, "Target sup error");
    sub_approx->add_option("--d", approx.d, "Input dimension");
    sub_approx->add_option("--cap", approx.cap, "Scan limit on |q| (default: the approximation bound)");
    sub_approx->add_option("--strategy", approx.strategy, "exhaustive or random");
    sub_approx->add_option("--sample-budget", approx.sample_budget, "Draws for the random strategy");
    sub_approx->add_option("--resolution", approx.resolution, "Sup-error grid points per axis");
    sub_approx->add_option("--grid-csv", approx.grid_csv, "Write x,f(x),Z(x) on the grid to PATH");

    FitArgs fit;
    auto* sub_fit = app.add_subcommand("fit", "Empirical risk minimisation on a CSV dataset")->fallthrough();
    sub_fit->add_option("--data", fit.data, "CSV with header x1,...,xd,y");
    sub_fit->add_option("--K", fit.K, "Output bound");
    sub_fit->add_option("--M", fit.M, "Grid resolution");
    sub_fit->add_option("--cap", fit.cap, "Scan limit on |q|");
    sub_fit->add_option("--strategy", fit.strategy, "exhaustive or random");
    sub_fit->add_option("--sample-budget", fit.sample_budget, "Draws for the random strategy");

    RateArgs rate;
    auto* sub_rate = app.add_subcommand("rate-study", "Convergence-rate experiment from a JSON config")->fallthrough();
    sub_rate->add_option("--config", rate.config, "Config JSON path");
    sub_rate->add_option("--csv", rate.csv, "Also write the CSV table to PATH");

    auto* sub_self = app.add_subcommand("selftest", "Quick internal checks")->fallthrough();

    auto error_json = [&](const std::string& status, const std::string& message) {
        out << json{{"status", status}, {"message", message}}.dump(2) << '\n';
        err << status << ": " << message << '\n';
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        set_precision_cap(common.precision_cap);
        if (*sub_bounds) return cmd_bounds(bounds, common, out);
        if (*sub_kron) return cmd_kron_search(kron, common, out);
        if (*sub_approx) return cmd_approximate(approx, common, out);
        if (*sub_fit) return cmd_fit(fit, common, out);
        if (*sub_rate) return cmd_rate_study(rate, common, out);
        if (*sub_self) return cmd_selftest(common, out);
    } catch (const FieldErrors& e) {
        out << json{{"status", "validation"}, {"fields", e.fields()}}.dump(2) << '\n';
        for (const auto& [field, why] : e.fields()) err << "config field '" << field << "': " << why << '\n';
        return kExitValidation;
    } catch (const ClassViolation& e) {
        error_json("class_violation", e.what());
        return kExitValidation;
    } catch (const DatasetError& e) {
        error_json("dataset_error", e.what());
        return kExitValidation;
    } catch (const PrecisionCapExceeded& e) {
        error_json("precision_cap", e.what());
        return kExitPrecisionCap;
    } catch (const std::invalid_argument& e) {
        error_json("validation", e.what());
        return kExitValidation;
    } catch (const std::out_of_range& e) {
        error_json("validation", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        error_json("internal", e.what());
        return kExitFailure;
    }
    return kExitValidation;
}

}  // namespace intnet::cli
