#pragma once

#include "durem/data.hpp"
#include "durem/types.hpp"

#include <optional>

namespace durem {

struct WeightParams {
    double psi_s{0.0};
    double psi_e{0.0};
    std::optional<double> tau;  // half-life; empty = no memory decay
    double duration_floor{1e-6};

    [[nodiscard]] double psi(Side side) const { return side == Side::start ? psi_s : psi_e; }
    void check() const;
};

// max(duration, floor)^psi
[[nodiscard]] double duration_weight(double duration, double psi, double floor);

// exp(-elapsed ln2 / tau) ln2 / tau, or 1 without a half-life.
[[nodiscard]] double memory_weight(double elapsed, std::optional<double> tau);

// Combined weight of a past event at time t. The start side anchors memory at
// t_start and, for an event still running at t, uses the duration observed so
// far (t - t_start). The end side anchors at t_end and requires t_end <= t.
// Throws std::invalid_argument when the anchor lies after t.
[[nodiscard]] double event_weight(const DurationEvent& event, Time t, const WeightParams& params, Side side);

}  // namespace durem
