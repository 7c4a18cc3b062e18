#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpdetect/experiments.hpp"
#include "cpdetect/limit_dist.hpp"
#include "cpdetect/simulate.hpp"
#include "cpdetect/variance.hpp"

namespace cpdetect::cli {

namespace {

using nlohmann::json;

class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

VarianceMethod parse_variance(const std::string& spec, const std::string& overlap) {
    const auto scheme =
        overlap == "ol" ? SubsamplingScheme::Overlapping : SubsamplingScheme::NonOverlapping;
    if (spec == "unadjusted") return VarianceMethod::unadjusted();
    if (spec == "adaptive") return VarianceMethod::subsampling(BlockLengthRule::adaptive(), scheme);
    if (spec.starts_with("fixed:")) {
        std::size_t l = 0;
        const std::string_view digits = std::string_view(spec).substr(6);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), l);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && l >= 1) {
            return VarianceMethod::subsampling(BlockLengthRule::fixed(l), scheme);
        }
    }
    throw InputError("--variance must be unadjusted, adaptive or fixed:<l> with l >= 1, got '" +
                     spec + "'");
}

const CLI::Validator kOpenUnitInterval(
    [](std::string& input) -> std::string {
        const auto v = parse_number(input);
        if (!v || !(*v > 0.0 && *v < 1.0)) return "value " + input + " not in the open interval (0, 1)";
        return {};
    },
    "(0,1)");

std::string format_fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

struct TestOptions {
    std::string input;
    std::string statistic = "wilcoxon";
    std::string variance = "adaptive";
    std::string overlap = "nol";
    double alpha = 0.05;
};

int cmd_test(const TestOptions& opt, std::ostream& out) {
    std::ifstream in(opt.input);
    if (!in) throw InputError("cannot open input file " + opt.input);
    std::vector<double> values;
    try {
        values = parse_series_csv(in);
    } catch (const std::invalid_argument& e) {
        throw InputError(opt.input + ": " + e.what());
    }
    if (values.size() < kMinTestLength) {
        throw InputError("need at least " + std::to_string(kMinTestLength) + " observations, got " +
                         std::to_string(values.size()));
    }
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");

    const TimeSeries series(std::move(values));
    const auto statistic = statistic_from_string(opt.statistic);
    const auto method = parse_variance(opt.variance, opt.overlap);
    if (method.kind == VarianceMethod::Kind::Subsampling &&
        method.rule.mode == BlockLengthRule::Mode::Fixed && method.rule.length > series.size() / 2) {
        throw InputError("fixed block length exceeds n/2");
    }
    const TestResult r = run_single_test(series, statistic, method, opt.alpha);

    json doc{{"statistic", r.statistic},
             {"sigma_hat", r.sigma_hat},
             {"normalized", r.normalized},
             {"p_value", r.p_value},
             {"critical_value", r.critical_value},
             {"change_point_estimate", r.change_point_estimate},
             {"block_length_used", nullptr},
             {"rho_hat", nullptr},
             {"n", series.size()},
             {"alpha", opt.alpha},
             {"decision", r.reject ? "reject" : "no_reject"}};
    if (r.block_length_used) doc["block_length_used"] = *r.block_length_used;
    if (r.rho_hat) doc["rho_hat"] = *r.rho_hat;
    out << doc.dump() << '\n';
    return kExitOk;
}

struct SimulateOptions {
    std::size_t n = 200;
    double rho = 0.0;
    std::string innovation = "gauss";
    double mu = 0.0;
    std::optional<std::size_t> tau;
    std::uint64_t seed = 1;
    std::string output;
};

int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
    if (opt.n < 2) throw InputError("--n must be >= 2");
    if (!(std::fabs(opt.rho) <= kRhoClamp)) {
        throw InputError("--rho must satisfy |rho| <= " + format_fixed(kRhoClamp, 3));
    }
    const std::size_t tau = opt.tau.value_or(opt.n / 2);
    if (tau > opt.n) throw InputError("--tau must be <= n");
    InnovationModel innovation;
    try {
        innovation = innovation_from_label(opt.innovation);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    const TimeSeries x = gen_ar1({opt.n, opt.rho, innovation, opt.mu, tau}, opt.seed);

    std::ostringstream csv;
    csv << "x\n" << std::setprecision(17);
    for (double v : x.values()) csv << v << '\n';
    if (opt.output.empty()) {
        out << csv.str();
        return kExitOk;
    }
    std::ofstream file(opt.output, std::ios::binary | std::ios::trunc);
    if (!file) throw InputError("cannot open " + opt.output + " for writing");
    file << csv.str();
    if (!file.flush()) throw InputError("failed writing " + opt.output);
    return kExitOk;
}

int cmd_experiment(ExperimentKind kind, const std::string& config_path, const std::string& dir,
                   std::ostream& out, std::ostream& err) {
    std::ifstream in(config_path);
    if (!in) throw InputError("cannot open config file " + config_path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(config_path + ": " + e.what());
    }
    ExperimentConfig config;
    try {
        config = config_from_json(doc);
    } catch (const ConfigError& e) {
        err << "config error in " << config_path << ":\n";
        for (const auto& p : e.problems()) err << "  " << p << '\n';
        return kExitInputError;
    }

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());

    const ExperimentTable table =
        kind == ExperimentKind::Size ? run_size_experiment(config) : run_power_experiment(config);
    const std::string stem = kind == ExperimentKind::Size ? "size_table" : "power_curves";
    const auto base = std::filesystem::path(dir) / stem;
    const auto csv_path = std::filesystem::path(base).concat(".csv");
    const auto json_path = std::filesystem::path(base).concat(".json");
    emit_results(table, OutputFormat::Csv, csv_path);
    emit_results(table, OutputFormat::Json, json_path);

    std::size_t failures = 0;
    for (const auto& c : table.cells) failures += c.failures;
    out << json{{"cells", table.cells.size()},
                {"failures", failures},
                {"csv", csv_path.string()},
                {"json", json_path.string()}}
               .dump()
        << '\n';
    return kExitOk;
}

int cmd_limit_quantile(double p, std::ostream& out) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("--p must lie in (0, 1)");
    out << format_fixed(ks_quantile(p), 6) << '\n';
    return kExitOk;
}

}  // namespace

std::vector<double> parse_series_csv(std::istream& in) {
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    bool seen_row = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto field = trim(line);
        if (field.empty()) continue;
        if (field.find(',') != std::string_view::npos) {
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": expected a single column");
        }
        const auto value = parse_number(field);
        if (!value) {
            if (!seen_row) {
                seen_row = true;  // header
                continue;
            }
            throw std::invalid_argument("line " + std::to_string(line_no) + ": '" +
                                        std::string(field) + "' is not a number");
        }
        if (!std::isfinite(*value)) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": non-finite value");
        }
        seen_row = true;
        values.push_back(*value);
    }
    return values;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Change-point tests for dependent time series based on two-sample U-statistics",
                 "cpdetect"};
    app.require_subcommand(1);

    TestOptions test_opt;
    auto* test = app.add_subcommand("test", "Test a recorded series for a level shift");
    test->add_option("input", test_opt.input, "CSV file with one numeric column")->required();
    test->add_option("--statistic", test_opt.statistic, "wilcoxon or cusum")
        ->check(CLI::IsMember({"wilcoxon", "cusum"}))
        ->capture_default_str();
    test->add_option("--variance", test_opt.variance, "unadjusted, adaptive or fixed:<l>")
        ->capture_default_str();
    test->add_option("--overlap", test_opt.overlap, "subsampling scheme: ol or nol")
        ->check(CLI::IsMember({"ol", "nol"}))
        ->capture_default_str();
    test->add_option("--alpha", test_opt.alpha, "significance level in (0, 1)")
        ->check(kOpenUnitInterval)
        ->capture_default_str();

    SimulateOptions sim_opt;
    auto* simulate = app.add_subcommand("simulate", "Simulate an AR(1) series with one level shift");
    simulate->add_option("--n", sim_opt.n, "series length")->required();
    simulate->add_option("--rho", sim_opt.rho, "AR(1) coefficient")->capture_default_str();
    simulate->add_option("--innovation", sim_opt.innovation, "gauss or t<nu>, e.g. t3")
        ->capture_default_str();
    simulate->add_option("--mu", sim_opt.mu, "shift height")->capture_default_str();
    simulate->add_option("--tau", sim_opt.tau, "observations before the shift (default n/2)");
    simulate->add_option("--seed", sim_opt.seed, "random seed")->capture_default_str();
    simulate->add_option("-o,--output", sim_opt.output, "output CSV (default: stdout)");

    std::string size_config, size_dir = ".";
    auto* exp_size = app.add_subcommand("experiment-size", "Empirical level table");
    exp_size->add_option("config", size_config, "experiment config JSON")->required();
    exp_size->add_option("-o,--output", size_dir, "output directory")->capture_default_str();

    std::string power_config, power_dir = ".";
    auto* exp_power = app.add_subcommand("experiment-power", "Empirical power curves");
    exp_power->add_option("config", power_config, "experiment config JSON")->required();
    exp_power->add_option("-o,--output", power_dir, "output directory")->capture_default_str();

    double p = 0.95;
    auto* quantile = app.add_subcommand("limit-quantile",
                                        "Quantile of sup |Brownian bridge| (Kolmogorov-Smirnov law)");
    quantile->add_option("--p", p, "probability in (0, 1)")->required()->check(kOpenUnitInterval);

    std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(argv_rest.begin(), argv_rest.end());  // CLI11 consumes from the back
    try {
        app.parse(argv_rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitInputError;
    }

    try {
        if (*test) return cmd_test(test_opt, out);
        if (*simulate) return cmd_simulate(sim_opt, out);
        if (*exp_size) return cmd_experiment(ExperimentKind::Size, size_config, size_dir, out, err);
        if (*exp_power) {
            return cmd_experiment(ExperimentKind::Power, power_config, power_dir, out, err);
        }
        if (*quantile) return cmd_limit_quantile(p, out);
    } catch (const DegenerateVarianceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitInputError;
}

}  // namespace cpdetect::cli
