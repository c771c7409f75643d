#include "durem/weighting.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace durem {

void WeightParams::check() const {
    if (!std::isfinite(psi_s) || !std::isfinite(psi_e)) throw ConfigError("duration exponents must be finite");
    if (tau && !(*tau > 0.0 && std::isfinite(*tau))) throw ConfigError("memory half-life must be positive");
    if (!(duration_floor > 0.0)) throw ConfigError("duration floor must be positive");
}

double duration_weight(double duration, double psi, double floor) {
    if (psi == 0.0) return 1.0;
    return std::pow(duration < floor ? floor : duration, psi);
}

double memory_weight(double elapsed, std::optional<double> tau) {
    if (!tau) return 1.0;
    const double rate = std::numbers::ln2 / *tau;
    return std::exp(-elapsed * rate) * rate;
}

double event_weight(const DurationEvent& event, Time t, const WeightParams& params, Side side) {
    const Time anchor = side == Side::start ? event.t_start : event.t_end;
    if (anchor > t) {
        throw std::invalid_argument("event anchored at " + std::to_string(anchor) + " is not in the history at " +
                                    std::to_string(t));
    }
    const double observed = side == Side::start && event.t_end > t ? t - event.t_start : event.duration();
    return duration_weight(observed, params.psi(side), params.duration_floor) * memory_weight(t - anchor, params.tau);
}

}  // namespace durem
