#pragma once

#include <cstddef>
#include <cstdint>

#include "cpdetect/rng.hpp"
#include "cpdetect/time_series.hpp"

namespace cpdetect {

/// Probability level at which scaled t innovations match the standard normal
/// quantile 1 (Phi(1) rounded to four places).
inline constexpr double kInnovationMatchLevel = 0.8413;

/// Burn-in steps discarded before the first recorded AR(1) value.
inline constexpr std::size_t kAr1BurnIn = 1000;

struct InnovationModel {
    enum class Kind { Gaussian, ScaledT };

    Kind kind = Kind::Gaussian;
    double nu = 0.0;     // degrees of freedom, ScaledT only
    double scale = 1.0;  // multiplier applied to the raw draw

    static InnovationModel gaussian() { return {}; }
    /// t_nu draws times t_scale_constant(nu).
    static InnovationModel scaled_t(double nu);

    friend bool operator==(const InnovationModel&, const InnovationModel&) = default;
};

/// X_i = xi_i for i <= tau and mu + xi_i for i > tau, xi an AR(1) with
/// coefficient rho driven by the innovation model.
struct ChangePointModel {
    std::size_t n = 200;
    double rho = 0.0;
    InnovationModel innovation;
    double mu = 0.0;
    std::size_t tau = 100;
};

/// Cdf of Student's t with nu degrees of freedom (via the regularized incomplete beta).
[[nodiscard]] double student_t_cdf(double t, double nu);

/// 1 / q where q is the t_nu quantile at kInnovationMatchLevel, found by bisection.
/// Throws std::invalid_argument for nu < 1.
[[nodiscard]] double t_scale_constant(double nu);

/// Draws one innovation.
[[nodiscard]] double innovation_sample(const InnovationModel& model, Engine& engine);

/// Simulates the change-point model. Deterministic in `seed`. Throws
/// std::invalid_argument for |rho| >= 1, n < 2 or tau > n.
[[nodiscard]] TimeSeries gen_ar1(const ChangePointModel& model, std::uint64_t seed);

}  // namespace cpdetect
