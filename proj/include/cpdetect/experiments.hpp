#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cpdetect/core_stats.hpp"
#include "cpdetect/simulate.hpp"
#include "cpdetect/time_series.hpp"
#include "cpdetect/variance.hpp"

namespace cpdetect {

/// T1 is the Wilcoxon-type statistic, T2 the CUSUM statistic.
enum class Statistic { T1, T2 };

/// How the max statistic is studentized.
struct VarianceMethod {
    enum class Kind { Unadjusted, Subsampling };

    Kind kind = Kind::Unadjusted;
    BlockLengthRule rule;
    SubsamplingScheme scheme = SubsamplingScheme::NonOverlapping;

    static VarianceMethod unadjusted() { return {}; }
    static VarianceMethod subsampling(BlockLengthRule rule, SubsamplingScheme scheme) {
        return {Kind::Subsampling, rule, scheme};
    }
};

/// Thrown when the studentizing scale is zero (e.g. a constant series).
class DegenerateVarianceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TestResult {
    double statistic = 0.0;     // max_k |process| / n^{3/2}
    double sigma_hat = 0.0;
    double normalized = 0.0;    // statistic / sigma_hat
    double p_value = 1.0;       // 1 - K(normalized), K the Kolmogorov-Smirnov cdf
    double critical_value = 0.0;
    bool reject = false;
    std::size_t change_point_estimate = 0;  // argmax k
    std::optional<std::size_t> block_length_used;
    std::optional<double> rho_hat;
};

/// Computes the max statistic, studentizes it and compares against the
/// asymptotic Kolmogorov-Smirnov critical value at level alpha.
///
/// The unadjusted scale ignores serial dependence: the population standard
/// deviation of F_n(X) for T1 and the sample standard deviation (n-1 divisor)
/// for T2. Throws DegenerateVarianceError when the scale is zero and
/// std::invalid_argument for alpha outside (0, 1).
[[nodiscard]] TestResult run_single_test(const TimeSeries& series, Statistic statistic,
                                         const VarianceMethod& method, double alpha);

// ---------------------------------------------------------------------------
// Monte Carlo harness
// ---------------------------------------------------------------------------

/// The five studentization variants of the level table.
enum class Variant { Unadjusted, FixedOl, FixedNol, AdaptiveOl, AdaptiveNol };

[[nodiscard]] std::string_view to_string(Statistic s);
[[nodiscard]] std::string_view to_string(Variant v);
[[nodiscard]] std::string innovation_label(const InnovationModel& m);  // "gauss", "t3", ...
[[nodiscard]] Statistic statistic_from_string(std::string_view s);
[[nodiscard]] Variant variant_from_string(std::string_view s);
[[nodiscard]] InnovationModel innovation_from_label(std::string_view s);

[[nodiscard]] VarianceMethod variance_method(Variant v, std::size_t fixed_l);

struct ExperimentConfig {
    std::size_t n = 200;
    std::vector<double> rhos{0.0, 0.4, 0.8};
    std::vector<InnovationModel> innovations{InnovationModel::gaussian(),
                                             InnovationModel::scaled_t(3.0)};
    std::vector<Statistic> statistics{Statistic::T1, Statistic::T2};
    std::vector<Variant> variants{Variant::Unadjusted, Variant::FixedOl, Variant::FixedNol,
                                  Variant::AdaptiveOl, Variant::AdaptiveNol};
    std::size_t fixed_l = 9;
    double alpha = 0.05;
    std::optional<std::size_t> replicates;  // unset: 4000 for size, 400 for power
    std::vector<double> mu_grid{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
    std::optional<std::size_t> tau;         // unset: n / 2
    std::uint64_t master_seed = 20240601;

    [[nodiscard]] std::size_t tau_or_default() const { return tau.value_or(n / 2); }
};

inline constexpr std::size_t kDefaultSizeReplicates = 4000;
inline constexpr std::size_t kDefaultPowerReplicates = 400;

/// Field-by-field validation errors, one message per offending field.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> problems);
    [[nodiscard]] const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Empty when the config is valid.
[[nodiscard]] std::vector<std::string> validate(const ExperimentConfig& config);

/// Parses a JSON document whose keys mirror ExperimentConfig's fields; missing
/// keys keep their defaults. Throws ConfigError listing every bad field.
[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json& doc);
[[nodiscard]] nlohmann::json config_to_json(const ExperimentConfig& config);

enum class ExperimentKind { Size, Power };

struct CellResult {
    double rho = 0.0;
    std::string innovation;
    Statistic statistic = Statistic::T1;
    Variant variant = Variant::Unadjusted;
    double mu = 0.0;
    std::size_t replicates = 0;  // successful evaluations, the binomial denominator
    std::size_t rejections = 0;
    std::size_t failures = 0;    // replicates whose scale was degenerate
    double value = 0.0;          // rejections / replicates
    double se = 0.0;             // sqrt(value (1 - value) / replicates)
    double mean_sigma_hat = 0.0;
    double mean_block_length = 0.0;  // 0 for the unadjusted variant

    friend bool operator==(const CellResult&, const CellResult&) = default;
};

struct ExperimentTable {
    ExperimentKind kind = ExperimentKind::Size;
    ExperimentConfig config;
    std::vector<CellResult> cells;

    /// Linear lookup; throws std::out_of_range when the cell is absent.
    [[nodiscard]] const CellResult& cell(double rho, std::string_view innovation, Statistic s,
                                         Variant v, double mu = 0.0) const;
};

using SizeTable = ExperimentTable;
using PowerCurve = ExperimentTable;

/// Seed of replicate `replicate` in the scenario (rho, innovation, mu). The
/// harness simulates that replicate as gen_ar1({n, rho, innovation, mu, tau}, seed).
[[nodiscard]] std::uint64_t scenario_seed(std::uint64_t master_seed, double rho,
                                          const InnovationModel& innovation, double mu,
                                          std::size_t replicate);

/// Worker count from CPDETECT_THREADS (0 or unset: hardware concurrency).
[[nodiscard]] std::size_t default_thread_count();

/// Rejection rates under H0 for every (rho, innovation, statistic, variant).
/// All statistics and variants of one (rho, innovation) scenario are evaluated
/// on the same simulated series; replicate r of a scenario always uses the
/// seed derived from (master_seed, rho, innovation, mu, r), so results do not
/// depend on thread count or on the other scenarios in the config.
[[nodiscard]] SizeTable run_size_experiment(const ExperimentConfig& config,
                                            std::size_t threads = 0);

/// Rejection rates with a shift of height mu after observation tau, for each mu
/// in the grid. The mu = 0 scenario reuses exactly the size-experiment streams.
[[nodiscard]] PowerCurve run_power_experiment(const ExperimentConfig& config,
                                              std::size_t threads = 0);

enum class OutputFormat { Csv, Json };

inline constexpr std::string_view kCsvHeader =
    "experiment,rho,innovation,statistic,variant,mu,value,se,replicates,rejections,failures,"
    "mean_sigma_hat,mean_block_length";

[[nodiscard]] std::string table_to_csv(const ExperimentTable& table);
[[nodiscard]] nlohmann::json table_to_json(const ExperimentTable& table);
[[nodiscard]] ExperimentTable table_from_json(const nlohmann::json& doc);

/// Writes the table to `path`. Throws std::runtime_error naming the path on I/O failure.
void emit_results(const ExperimentTable& table, OutputFormat format,
                  const std::filesystem::path& path);

}  // namespace cpdetect
