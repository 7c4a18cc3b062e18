#include "cpdetect/experiments.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "cpdetect/limit_dist.hpp"
#include "cpdetect/rng.hpp"

namespace cpdetect {

using nlohmann::json;

namespace {

double population_sd(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / n);
}

double sample_sd(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    return population_sd(x) * std::sqrt(n / (n - 1.0));
}

bool is_constant(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

struct Scale {
    double sigma_hat;
    std::optional<std::size_t> block_length;
    std::optional<double> rho_hat;
};

Scale studentizing_scale(const TimeSeries& series, Statistic statistic,
                         const VarianceMethod& method) {
    if (method.kind == VarianceMethod::Kind::Unadjusted) {
        if (statistic == Statistic::T1) {
            return {population_sd(edf_transform(series).values()), std::nullopt, std::nullopt};
        }
        return {sample_sd(series.values()), std::nullopt, std::nullopt};
    }
    if (method.rule.mode == BlockLengthRule::Mode::CarlsteinAdaptive && is_constant(series.values())) {
        throw DegenerateVarianceError("degenerate variance: constant series");
    }
    const VarianceEstimate est = (statistic == Statistic::T1)
                                     ? sigma1_subsampling(series, method.rule, method.scheme)
                                     : sigma2_subsampling(series, method.rule, method.scheme);
    return {est.sigma_hat, est.block_length_used, est.rho_hat};
}

TestResult studentize(const MaxStatistic& max, const Scale& scale, double critical_value) {
    if (!(scale.sigma_hat > 0.0)) {
        throw DegenerateVarianceError("degenerate variance: estimated scale is zero");
    }
    TestResult r;
    r.statistic = max.value;
    r.sigma_hat = scale.sigma_hat;
    r.normalized = max.value / scale.sigma_hat;
    r.p_value = 1.0 - ks_cdf(r.normalized);
    r.critical_value = critical_value;
    r.reject = r.normalized > critical_value;
    r.change_point_estimate = max.argmax_k;
    r.block_length_used = scale.block_length;
    r.rho_hat = scale.rho_hat;
    return r;
}

ProcessTrace process_for(const TimeSeries& series, Statistic statistic) {
    return statistic == Statistic::T1 ? wilcoxon_process(series) : cusum_process(series);
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

std::uint64_t double_key(double v) { return std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v); }

std::uint64_t innovation_key(const InnovationModel& m) {
    return m.kind == InnovationModel::Kind::Gaussian ? 0 : mix64(double_key(m.nu));
}

}  // namespace

TestResult run_single_test(const TimeSeries& series, Statistic statistic,
                           const VarianceMethod& method, double alpha) {
    check_alpha(alpha);
    const MaxStatistic max = max_statistic(process_for(series, statistic));
    return studentize(max, studentizing_scale(series, statistic, method), ks_quantile(1.0 - alpha));
}

// ---------------------------------------------------------------------------
// names
// ---------------------------------------------------------------------------

std::string_view to_string(Statistic s) { return s == Statistic::T1 ? "T1" : "T2"; }

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::Unadjusted: return "unadjusted";
        case Variant::FixedOl: return "fixed_ol";
        case Variant::FixedNol: return "fixed_nol";
        case Variant::AdaptiveOl: return "adaptive_ol";
        case Variant::AdaptiveNol: return "adaptive_nol";
    }
    return "?";
}

Statistic statistic_from_string(std::string_view s) {
    if (s == "T1" || s == "wilcoxon") return Statistic::T1;
    if (s == "T2" || s == "cusum") return Statistic::T2;
    throw std::invalid_argument("unknown statistic '" + std::string(s) + "'");
}

Variant variant_from_string(std::string_view s) {
    for (Variant v : {Variant::Unadjusted, Variant::FixedOl, Variant::FixedNol, Variant::AdaptiveOl,
                      Variant::AdaptiveNol}) {
        if (to_string(v) == s) return v;
    }
    throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

std::string innovation_label(const InnovationModel& m) {
    if (m.kind == InnovationModel::Kind::Gaussian) return "gauss";
    std::ostringstream os;
    os << 't' << m.nu;
    return os.str();
}

InnovationModel innovation_from_label(std::string_view s) {
    if (s == "gauss" || s == "gaussian" || s == "normal") return InnovationModel::gaussian();
    if (s.size() > 1 && s.front() == 't') {
        double nu = 0.0;
        const auto* first = s.data() + 1;
        const auto* last = s.data() + s.size();
        const auto [ptr, ec] = std::from_chars(first, last, nu);
        if (ec == std::errc() && ptr == last && nu >= 1.0) return InnovationModel::scaled_t(nu);
    }
    throw std::invalid_argument("unknown innovation '" + std::string(s) +
                                "' (expected gauss or t<nu> with nu >= 1)");
}

VarianceMethod variance_method(Variant v, std::size_t fixed_l) {
    switch (v) {
        case Variant::Unadjusted: return VarianceMethod::unadjusted();
        case Variant::FixedOl:
            return VarianceMethod::subsampling(BlockLengthRule::fixed(fixed_l),
                                               SubsamplingScheme::Overlapping);
        case Variant::FixedNol:
            return VarianceMethod::subsampling(BlockLengthRule::fixed(fixed_l),
                                               SubsamplingScheme::NonOverlapping);
        case Variant::AdaptiveOl:
            return VarianceMethod::subsampling(BlockLengthRule::adaptive(),
                                               SubsamplingScheme::Overlapping);
        case Variant::AdaptiveNol:
            return VarianceMethod::subsampling(BlockLengthRule::adaptive(),
                                               SubsamplingScheme::NonOverlapping);
    }
    throw std::invalid_argument("unknown variant");
}

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += "; ";
        out += p;
    }
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument("invalid experiment config: " + join(problems)),
      problems_(std::move(problems)) {}

std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> problems;
    if (c.n < 4) problems.push_back("n: must be >= 4");
    if (c.rhos.empty()) problems.push_back("rhos: must not be empty");
    for (double r : c.rhos) {
        if (!(std::fabs(r) < 1.0)) {
            problems.push_back("rhos: every entry must satisfy |rho| < 1");
            break;
        }
    }
    if (c.innovations.empty()) problems.push_back("innovations: must not be empty");
    if (c.statistics.empty()) problems.push_back("statistics: must not be empty");
    if (c.variants.empty()) problems.push_back("variants: must not be empty");
    const bool uses_fixed = std::any_of(c.variants.begin(), c.variants.end(), [](Variant v) {
        return v == Variant::FixedOl || v == Variant::FixedNol;
    });
    if (uses_fixed && (c.fixed_l < 1 || c.fixed_l > c.n / 2)) {
        problems.push_back("fixed_l: must lie in [1, n/2]");
    }
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) problems.push_back("alpha: must lie in (0, 1)");
    if (c.replicates && *c.replicates < 1) problems.push_back("replicates: must be >= 1");
    if (c.mu_grid.empty()) problems.push_back("mu_grid: must not be empty");
    if (!std::is_sorted(c.mu_grid.begin(), c.mu_grid.end())) {
        problems.push_back("mu_grid: must be sorted ascending");
    }
    for (double m : c.mu_grid) {
        if (!std::isfinite(m)) {
            problems.push_back("mu_grid: entries must be finite");
            break;
        }
    }
    if (c.tau && *c.tau > c.n) problems.push_back("tau: must be <= n");
    return problems;
}

ExperimentConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError({"<root>: expected a JSON object"});
    static const std::set<std::string> known{"n",       "rhos",       "innovations", "statistics",
                                             "variants", "fixed_l",   "alpha",       "replicates",
                                             "mu_grid", "tau",        "master_seed"};
    ExperimentConfig c;
    std::vector<std::string> problems;

    // Each field is read independently so that all problems are reported together.
    auto read = [&](const char* key, auto&& assign) {
        if (!doc.contains(key)) return;
        try {
            assign(doc.at(key));
        } catch (const std::exception& e) {
            problems.push_back(std::string(key) + ": " + e.what());
        }
    };
    auto unsigned_value = [](const json& v) -> std::size_t {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        const auto value = v.get<std::int64_t>();
        if (value < 0) throw std::invalid_argument("must be >= 0");
        return static_cast<std::size_t>(value);
    };
    auto number = [](const json& v) -> double {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
        return v.get<double>();
    };
    auto number_list = [&](const json& v) {
        if (!v.is_array()) throw std::invalid_argument("expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) out.push_back(number(e));
        return out;
    };
    auto string_list = [](const json& v) {
        if (!v.is_array()) throw std::invalid_argument("expected an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) throw std::invalid_argument("expected an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    };

    for (const auto& [key, _] : doc.items()) {
        if (!known.contains(key)) problems.push_back(key + ": unknown field");
    }
    read("n", [&](const json& v) { c.n = unsigned_value(v); });
    read("rhos", [&](const json& v) { c.rhos = number_list(v); });
    read("innovations", [&](const json& v) {
        c.innovations.clear();
        for (const auto& s : string_list(v)) c.innovations.push_back(innovation_from_label(s));
    });
    read("statistics", [&](const json& v) {
        c.statistics.clear();
        for (const auto& s : string_list(v)) c.statistics.push_back(statistic_from_string(s));
    });
    read("variants", [&](const json& v) {
        c.variants.clear();
        for (const auto& s : string_list(v)) c.variants.push_back(variant_from_string(s));
    });
    read("fixed_l", [&](const json& v) { c.fixed_l = unsigned_value(v); });
    read("alpha", [&](const json& v) { c.alpha = number(v); });
    read("replicates", [&](const json& v) { c.replicates = unsigned_value(v); });
    read("mu_grid", [&](const json& v) { c.mu_grid = number_list(v); });
    read("tau", [&](const json& v) { c.tau = unsigned_value(v); });
    read("master_seed", [&](const json& v) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw std::invalid_argument("expected a non-negative integer");
        }
        c.master_seed = v.get<std::uint64_t>();
    });

    // Range checks only make sense once every field parsed.
    if (problems.empty()) problems = validate(c);
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json doc;
    doc["n"] = c.n;
    doc["rhos"] = c.rhos;
    json innovations = json::array();
    for (const auto& m : c.innovations) innovations.push_back(innovation_label(m));
    doc["innovations"] = innovations;
    json statistics = json::array();
    for (auto s : c.statistics) statistics.push_back(std::string(to_string(s)));
    doc["statistics"] = statistics;
    json variants = json::array();
    for (auto v : c.variants) variants.push_back(std::string(to_string(v)));
    doc["variants"] = variants;
    doc["fixed_l"] = c.fixed_l;
    doc["alpha"] = c.alpha;
    if (c.replicates) doc["replicates"] = *c.replicates;
    doc["mu_grid"] = c.mu_grid;
    if (c.tau) doc["tau"] = *c.tau;
    doc["master_seed"] = c.master_seed;
    return doc;
}

// ---------------------------------------------------------------------------
// harness
// ---------------------------------------------------------------------------

std::uint64_t scenario_seed(std::uint64_t master_seed, double rho,
                            const InnovationModel& innovation, double mu, std::size_t replicate) {
    return derive_seed(master_seed, {double_key(rho), innovation_key(innovation), double_key(mu),
                                     static_cast<std::uint64_t>(replicate)});
}

std::size_t default_thread_count() {
    if (const char* env = std::getenv("CPDETECT_THREADS")) {
        std::size_t value = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec == std::errc() && ptr == s.data() + s.size() && value > 0) return value;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

const CellResult& ExperimentTable::cell(double rho, std::string_view innovation, Statistic s,
                                        Variant v, double mu) const {
    for (const auto& c : cells) {
        if (c.rho == rho && c.innovation == innovation && c.statistic == s && c.variant == v &&
            c.mu == mu) {
            return c;
        }
    }
    throw std::out_of_range("no cell for rho=" + std::to_string(rho) + " innovation=" +
                            std::string(innovation) + " statistic=" + std::string(to_string(s)) +
                            " variant=" + std::string(to_string(v)) + " mu=" + std::to_string(mu));
}

namespace {

struct Outcome {
    bool ok = false;
    bool reject = false;
    double sigma_hat = 0.0;
    double block_length = 0.0;
};

struct Scenario {
    double rho;
    InnovationModel innovation;
    double mu;
};

// Runs every (statistic, variant) test on `replicates` series of one scenario
// and appends one cell per test to `out`.
void run_scenario(const ExperimentConfig& config, const Scenario& scenario, std::size_t replicates,
                  double critical_value, std::size_t threads, std::vector<CellResult>& out) {
    const std::size_t tests = config.statistics.size() * config.variants.size();
    std::vector<Outcome> outcomes(replicates * tests);

    std::vector<VarianceMethod> methods;
    for (Variant v : config.variants) methods.push_back(variance_method(v, config.fixed_l));

    const ChangePointModel model{config.n, scenario.rho, scenario.innovation, scenario.mu,
                                 config.tau_or_default()};

    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t r = first; r < replicates; r += stride) {
            const auto seed = scenario_seed(config.master_seed, scenario.rho, scenario.innovation,
                                            scenario.mu, r);
            const TimeSeries series = gen_ar1(model, seed);
            std::size_t t = 0;
            for (Statistic s : config.statistics) {
                const MaxStatistic max = max_statistic(process_for(series, s));
                for (const auto& method : methods) {
                    Outcome& o = outcomes[r * tests + t++];
                    try {
                        const auto res = studentize(max, studentizing_scale(series, s, method),
                                                    critical_value);
                        o = {true, res.reject, res.sigma_hat,
                             static_cast<double>(res.block_length_used.value_or(0))};
                    } catch (const DegenerateVarianceError&) {
                        o = {};
                    }
                }
            }
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(replicates, 1));
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    }

    // Sequential reduction in replicate order keeps the sums thread-count independent.
    std::size_t t = 0;
    for (Statistic s : config.statistics) {
        for (Variant v : config.variants) {
            CellResult cell;
            cell.rho = scenario.rho;
            cell.innovation = innovation_label(scenario.innovation);
            cell.statistic = s;
            cell.variant = v;
            cell.mu = scenario.mu;
            double sigma_sum = 0.0;
            double block_sum = 0.0;
            for (std::size_t r = 0; r < replicates; ++r) {
                const Outcome& o = outcomes[r * tests + t];
                if (!o.ok) {
                    ++cell.failures;
                    continue;
                }
                ++cell.replicates;
                if (o.reject) ++cell.rejections;
                sigma_sum += o.sigma_hat;
                block_sum += o.block_length;
            }
            if (cell.replicates > 0) {
                const double R = static_cast<double>(cell.replicates);
                cell.value = static_cast<double>(cell.rejections) / R;
                cell.se = std::sqrt(cell.value * (1.0 - cell.value) / R);
                cell.mean_sigma_hat = sigma_sum / R;
                cell.mean_block_length = block_sum / R;
            }
            out.push_back(std::move(cell));
            ++t;
        }
    }
}

ExperimentTable run_experiment(const ExperimentConfig& config, ExperimentKind kind,
                               std::size_t threads) {
    if (auto problems = validate(config); !problems.empty()) throw ConfigError(std::move(problems));
    if (threads == 0) threads = default_thread_count();
    const std::size_t replicates = config.replicates.value_or(
        kind == ExperimentKind::Size ? kDefaultSizeReplicates : kDefaultPowerReplicates);
    const double critical_value = ks_quantile(1.0 - config.alpha);
    const std::vector<double> mus = (kind == ExperimentKind::Size) ? std::vector<double>{0.0}
                                                                   : config.mu_grid;

    ExperimentTable table{kind, config, {}};
    for (const auto& innovation : config.innovations) {
        for (double rho : config.rhos) {
            for (double mu : mus) {
                run_scenario(config, {rho, innovation, mu}, replicates, critical_value, threads,
                             table.cells);
            }
        }
    }
    return table;
}

}  // namespace

SizeTable run_size_experiment(const ExperimentConfig& config, std::size_t threads) {
    return run_experiment(config, ExperimentKind::Size, threads);
}

PowerCurve run_power_experiment(const ExperimentConfig& config, std::size_t threads) {
    return run_experiment(config, ExperimentKind::Power, threads);
}

// ---------------------------------------------------------------------------
// output
// ---------------------------------------------------------------------------

namespace {

std::string_view kind_name(ExperimentKind k) { return k == ExperimentKind::Size ? "size" : "power"; }

std::string format_double(double v) {
    // Shortest representation that round-trips.
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

json cell_to_json(const CellResult& c) {
    return {{"rho", c.rho},
            {"innovation", c.innovation},
            {"statistic", std::string(to_string(c.statistic))},
            {"variant", std::string(to_string(c.variant))},
            {"mu", c.mu},
            {"value", c.value},
            {"se", c.se},
            {"replicates", c.replicates},
            {"rejections", c.rejections},
            {"failures", c.failures},
            {"mean_sigma_hat", c.mean_sigma_hat},
            {"mean_block_length", c.mean_block_length}};
}

CellResult cell_from_json(const json& j) {
    CellResult c;
    c.rho = j.at("rho").get<double>();
    c.innovation = j.at("innovation").get<std::string>();
    c.statistic = statistic_from_string(j.at("statistic").get<std::string>());
    c.variant = variant_from_string(j.at("variant").get<std::string>());
    c.mu = j.at("mu").get<double>();
    c.value = j.at("value").get<double>();
    c.se = j.at("se").get<double>();
    c.replicates = j.at("replicates").get<std::size_t>();
    c.rejections = j.at("rejections").get<std::size_t>();
    c.failures = j.at("failures").get<std::size_t>();
    c.mean_sigma_hat = j.at("mean_sigma_hat").get<double>();
    c.mean_block_length = j.at("mean_block_length").get<double>();
    return c;
}

}  // namespace

std::string table_to_csv(const ExperimentTable& table) {
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const auto& c : table.cells) {
        os << kind_name(table.kind) << ',' << format_double(c.rho) << ',' << c.innovation << ','
           << to_string(c.statistic) << ',' << to_string(c.variant) << ',' << format_double(c.mu)
           << ',' << format_double(c.value) << ',' << format_double(c.se) << ',' << c.replicates
           << ',' << c.rejections << ',' << c.failures << ',' << format_double(c.mean_sigma_hat)
           << ',' << format_double(c.mean_block_length) << '\n';
    }
    return os.str();
}

// Cells are nested innovation -> rho -> statistic -> variant -> mu; each leaf
// carries its full key so the document can be read back without the nesting.
json table_to_json(const ExperimentTable& table) {
    json results = json::object();
    for (const auto& c : table.cells) {
        results[c.innovation][format_double(c.rho)][std::string(to_string(c.statistic))]
               [std::string(to_string(c.variant))][format_double(c.mu)] = cell_to_json(c);
    }
    return {{"experiment", std::string(kind_name(table.kind))},
            {"master_seed", table.config.master_seed},
            {"config", config_to_json(table.config)},
            {"cells", table.cells.size()},
            {"results", results}};
}

ExperimentTable table_from_json(const json& doc) {
    ExperimentTable table;
    const auto kind = doc.at("experiment").get<std::string>();
    if (kind != "size" && kind != "power") throw std::invalid_argument("unknown experiment kind " + kind);
    table.kind = kind == "size" ? ExperimentKind::Size : ExperimentKind::Power;
    table.config = config_from_json(doc.at("config"));

    std::vector<CellResult> cells;
    for (const auto& [_, by_rho] : doc.at("results").items())
        for (const auto& [_, by_stat] : by_rho.items())
            for (const auto& [_, by_variant] : by_stat.items())
                for (const auto& [_, by_mu] : by_variant.items())
                    for (const auto& [_, leaf] : by_mu.items()) cells.push_back(cell_from_json(leaf));

    // JSON objects are key-sorted; restore the run order (innovation, rho, mu,
    // statistic, variant) from the config.
    auto position = [&](const auto& range, const auto& value) {
        return static_cast<std::size_t>(std::find(range.begin(), range.end(), value) - range.begin());
    };
    std::vector<std::string> innovation_labels;
    for (const auto& m : table.config.innovations) innovation_labels.push_back(innovation_label(m));
    auto key = [&](const CellResult& c) {
        return std::tuple{position(innovation_labels, c.innovation), position(table.config.rhos, c.rho),
                          position(table.config.mu_grid, c.mu), c.mu,
                          position(table.config.statistics, c.statistic),
                          position(table.config.variants, c.variant)};
    };
    std::stable_sort(cells.begin(), cells.end(),
                     [&](const CellResult& a, const CellResult& b) { return key(a) < key(b); });
    table.cells = std::move(cells);
    return table;
}

void emit_results(const ExperimentTable& table, OutputFormat format,
                  const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    if (format == OutputFormat::Csv) {
        out << table_to_csv(table);
    } else {
        out << table_to_json(table).dump(2) << '\n';
    }
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace cpdetect
