#pragma once

#include "durem/estimation.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace durem {

struct SimConfig {
    std::size_t actors{0};
    ModelSpec spec;
    Coefficients coef;
    WeightParams weights;
    CovariateSet covariates;
    // Stop rule: after `events` starts, or once time passes `horizon`, the
    // process continues until no event is ongoing, so the emitted window is
    // closed. More than `max_extra_starts` further starts switch to ending
    // the open events with starts suppressed.
    std::size_t events{0};
    std::optional<Time> horizon;
    std::size_t max_extra_starts{1000};
    std::uint64_t seed{0};

    void check() const;
};

// Seed of replication `rep`: SplitMix64 applied to the base seed and the
// replication index.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replication);

// mt19937_64 with 53-bit uniforms in [0, 1).
class SimRng {
public:
    explicit SimRng(std::uint64_t seed) : engine_(seed) {}
    double uniform();
    double exponential(double rate);

private:
    std::mt19937_64 engine_;
};

// Actor labels a0, a1, ... (zero-padded to a common width).
std::vector<std::string> simulated_labels(std::size_t n);

// Attribute `name` with value i mod `levels` for actor i.
void add_cyclic_attribute(CovariateSet& covariates, const std::string& name, std::size_t levels);

struct SimulationInfo {
    std::size_t extra_starts{0};  // starts after the stop rule fired
    bool drained{false};          // the extra-start cap was hit
};

EventHistory simulate(const SimConfig& cfg, std::uint64_t replication = 0, SimulationInfo* info = nullptr);

struct RecoveryRow {
    std::size_t replication{0};
    bool ok{false};
    std::string error;
    double psi_s{0.0};
    double psi_e{0.0};
    std::optional<double> tau;
    double loglik{0.0};
    std::vector<double> estimate;
    std::vector<double> se;
    std::vector<double> z;  // (estimate - truth) / se
};

struct RecoverySummary {
    std::vector<std::string> parameters;
    std::vector<double> truth;
    std::vector<RecoveryRow> rows;
    std::vector<double> mean_z;
    std::vector<double> within_3se;  // fraction of successful replications
    std::vector<double> coverage_95;
    // "psi_s,psi_e,tau" -> count
    std::map<std::string, std::size_t> selections;
    std::size_t failures{0};
};

// Simulates, fits and scores each replication; failures are recorded and do
// not abort the study.
RecoverySummary recovery_study(const SimConfig& cfg, std::size_t replications, const GridSpec& grid, int workers = 1,
                               const OptimizerOptions& options = {});

void write_recovery(const RecoverySummary& summary, std::ostream& replications, std::ostream& summary_out);

}  // namespace durem
