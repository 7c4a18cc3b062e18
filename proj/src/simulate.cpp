#include "cpdetect/simulate.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace cpdetect {

InnovationModel InnovationModel::scaled_t(double nu) {
    return {Kind::ScaledT, nu, t_scale_constant(nu)};
}

double student_t_cdf(double t, double nu) {
    if (!(nu > 0.0)) throw std::invalid_argument("student_t_cdf needs nu > 0");
    const double tail = 0.5 * boost::math::ibeta(nu / 2.0, 0.5, nu / (nu + t * t));
    return t >= 0.0 ? 1.0 - tail : tail;
}

double t_scale_constant(double nu) {
    if (!(nu >= 1.0)) throw std::invalid_argument("t_scale_constant needs nu >= 1");
    double lo = 0.0;
    double hi = 1.0;
    while (student_t_cdf(hi, nu) < kInnovationMatchLevel) hi *= 2.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, nu) < kInnovationMatchLevel) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 1.0 / (0.5 * (lo + hi));
}

double innovation_sample(const InnovationModel& model, Engine& engine) {
    if (model.kind == InnovationModel::Kind::Gaussian) {
        return model.scale * std::normal_distribution<double>{}(engine);
    }
    return model.scale * std::student_t_distribution<double>{model.nu}(engine);
}

TimeSeries gen_ar1(const ChangePointModel& model, std::uint64_t seed) {
    if (!(std::fabs(model.rho) < 1.0)) throw std::invalid_argument("AR(1) needs |rho| < 1");
    if (model.n < 2) throw std::invalid_argument("series length must be >= 2");
    if (model.tau > model.n) throw std::invalid_argument("change index tau exceeds n");

    Engine engine = make_engine(seed);
    double xi = 0.0;
    for (std::size_t i = 0; i < kAr1BurnIn; ++i) {
        xi = model.rho * xi + innovation_sample(model.innovation, engine);
    }
    std::vector<double> x(model.n);
    for (std::size_t i = 0; i < model.n; ++i) {
        xi = model.rho * xi + innovation_sample(model.innovation, engine);
        x[i] = (i >= model.tau) ? xi + model.mu : xi;
    }
    return TimeSeries(std::move(x));
}

}  // namespace cpdetect
