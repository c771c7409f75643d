#pragma once

#include "durem/data.hpp"
#include "durem/estimation.hpp"
#include "durem/simulation.hpp"

#include <filesystem>
#include <istream>
#include <optional>
#include <string>

namespace durem {

struct SimulateSection {
    std::size_t actors{0};
    std::size_t events{0};
    std::optional<Time> horizon;
    std::vector<double> start_coef;
    std::vector<double> end_coef;
    // (name, levels): attribute with value i mod levels
    std::optional<std::pair<std::string, std::size_t>> cyclic_attribute;
    std::size_t replications{1};
    bool present{false};
};

// Everything a run needs besides the input files.
struct RunConfig {
    ModelSpec spec;
    std::optional<Time> observation_end;
    WeightParams weights;
    bool floor_auto{true};
    GridSpec grid;
    bool grid_given{false};
    OptimizerOptions optimizer;
    ColumnMap columns;
    bool collapse_gaps{false};
    std::optional<std::uint64_t> seed;
    SimulateSection simulate;

    // Duration floor for `history`: the configured value or the automatic one.
    [[nodiscard]] double duration_floor(const EventHistory& history) const;
    // Simulation settings; needs a [simulate] section.
    [[nodiscard]] SimConfig sim_config() const;
};

// INI file with sections [model], [weights], [grid], [optimizer], [data] and
// [simulate]. Unknown sections, keys and statistics are ConfigErrors.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

// "a, b, c" or "from:to:step" (inclusive).
std::vector<double> parse_real_list(const std::string& text);
// Like parse_real_list; "none" stands for the absent half-life.
std::vector<std::optional<double>> parse_tau_list(const std::string& text);

}  // namespace durem
