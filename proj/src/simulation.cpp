#include "durem/simulation.hpp"

#include "durem/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace durem {

void SimConfig::check() const {
    if (actors < 2) throw ConfigError("simulation needs at least 2 actors");
    if (events == 0 && !horizon) throw ConfigError("simulation needs a stop rule (events or horizon)");
    if (horizon && !(std::isfinite(*horizon) && *horizon > 0.0)) throw ConfigError("horizon must be positive");
    weights.check();
    if (!covariates.attributes.empty() || !covariates.ties.empty()) {
        if (covariates.n_actors != actors) {
            throw ConfigError(fmt::format("covariates cover {} actors, simulation has {}", covariates.n_actors, actors));
        }
    }
    spec.check(&covariates);
    for (Side side : {Side::start, Side::end}) {
        const auto expected = spec.stats(side).size() + 1;
        if (coef.side(side).size() != expected) {
            throw ConfigError(fmt::format("{} coefficients: expected {} (baseline first), got {}", to_string(side),
                                          expected, coef.side(side).size()));
        }
        for (double b : coef.side(side)) {
            if (!std::isfinite(b)) throw ConfigError("coefficients must be finite");
        }
    }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replication) {
    return splitmix64(splitmix64(seed) ^ replication);
}

double SimRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SimRng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

std::vector<std::string> simulated_labels(std::size_t n) {
    const auto width = fmt::format("{}", n > 0 ? n - 1 : 0).size();
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(fmt::format("a{:0{}}", i, width));
    return out;
}

void add_cyclic_attribute(CovariateSet& covariates, const std::string& name, std::size_t levels) {
    if (levels == 0) throw ConfigError("attribute levels must be positive");
    auto& values = covariates.attributes[name];
    values.resize(covariates.n_actors);
    for (std::size_t i = 0; i < covariates.n_actors; ++i) {
        const auto v = static_cast<double>(i % levels);
        values[i] = AttributeValue{text::format_double(v), v};
    }
}

EventHistory simulate(const SimConfig& cfg, std::uint64_t replication, SimulationInfo* info) {
    cfg.check();
    EventHistory history;
    for (const auto& label : simulated_labels(cfg.actors)) history.actors.intern(label);

    CovariateSet covariates = cfg.covariates;
    if (covariates.n_actors == 0) covariates.resize(cfg.actors);

    SimRng rng(stream_seed(cfg.seed, replication));
    StatisticsEngine engine(cfg.actors, cfg.spec, covariates, cfg.weights);
    const auto& rs = engine.riskset();

    DesignBlock blocks[2];
    for (Side side : {Side::start, Side::end}) {
        for (const auto& s : cfg.spec.stats(side)) blocks[static_cast<int>(side)].columns.push_back(s.label());
    }
    std::vector<double> row;
    std::vector<double> rates;

    Time t = 0.0;
    std::size_t starts = 0;
    // Once the stop rule fires, the full process runs on until nothing is
    // ongoing. Past `cap` starts, further starts are suppressed instead.
    bool stopping = false;
    std::size_t cap = 0;
    SimulationInfo local;
    SimulationInfo& inf = info ? *info : local;
    inf = {};
    for (std::size_t m = 0;; ++m) {
        if (!stopping && cfg.events > 0 && starts >= cfg.events) {
            stopping = true;
            cap = starts + std::max(cfg.max_extra_starts, std::size_t{1});
        }
        if (stopping && rs.n_at_end() == 0) break;
        const bool starts_open = !stopping || starts < cap;
        if (!starts_open) inf.drained = true;

        engine.evaluate(t);
        rates.clear();
        for (Side side : {Side::start, Side::end}) {
            auto& block = blocks[static_cast<int>(side)];
            block.dyads.clear();
            block.values.clear();
            if (side == Side::start && !starts_open) continue;
            const auto& space = rs.space(side);
            row.resize(block.n_cols());
            for (DyadIndex d = 0; d < space.size(); ++d) {
                if (!(side == Side::start ? rs.at_risk_to_start(d) : rs.at_risk_to_end(d))) continue;
                engine.fill_row(side, d, row);
                block.dyads.push_back(d);
                block.values.insert(block.values.end(), row.begin(), row.end());
            }
            standardize_rows(block, 0, block.n_rows(), cfg.spec.stats(side));
            const auto& beta = cfg.coef.side(side);
            for (std::size_t r = 0; r < block.n_rows(); ++r) {
                double eta = beta[0];
                const auto x = block.row(r);
                for (std::size_t k = 0; k < x.size(); ++k) eta += beta[k + 1] * x[k];
                const double rate = std::exp(eta);
                if (!std::isfinite(rate)) {
                    throw NumericError(fmt::format(
                        "rate overflow at simulated transition {} ({} side, linear predictor {}); reduce the "
                        "coefficients or the duration exponent",
                        m, to_string(side), text::format_double(eta)));
                }
                rates.push_back(rate);
            }
        }
        double total = 0.0;
        for (double r : rates) total += r;
        if (!(total > 0.0) || !std::isfinite(total)) {
            if (rs.n_at_end() > 0 || !std::isfinite(total)) {
                throw NumericError(fmt::format("total rate {} at simulated transition {}", total, m));
            }
            break;
        }

        const Time next = t + rng.exponential(total);
        if (!stopping && cfg.horizon && next > *cfg.horizon) {
            stopping = true;
            cap = starts + std::max(cfg.max_extra_starts, std::size_t{1});
            if (rs.n_at_end() == 0) break;
        }

        const double target = rng.uniform() * total;
        std::size_t pick = rates.size() - 1;
        double cumulative = 0.0;
        for (std::size_t k = 0; k < rates.size(); ++k) {
            cumulative += rates[k];
            if (target < cumulative) {
                pick = k;
                break;
            }
        }

        Transition tr;
        tr.index = m;
        tr.time = next;
        const std::size_t n_start_rows = blocks[0].n_rows();
        if (pick < n_start_rows) {
            const DyadIndex d = blocks[0].dyads[pick];
            if (!rs.at_risk_to_start(d)) throw std::logic_error("simulated start outside the start risk set");
            const auto [i, j] = rs.space(Side::start).actors(d);
            tr.kind = TransitionKind::start;
            tr.sender = i;
            tr.receiver = j;
            tr.event = history.events.size();
            DurationEvent e;
            e.sender = i;
            e.receiver = j;
            e.t_start = next;
            e.t_end = std::numeric_limits<double>::quiet_NaN();
            e.row = history.events.size();
            history.events.push_back(e);
            ++starts;
            if (stopping) ++inf.extra_starts;
        } else {
            const DyadIndex d = blocks[1].dyads[pick - n_start_rows];
            if (!rs.at_risk_to_end(d)) throw std::logic_error("simulated end outside the end risk set");
            const auto ongoing = rs.ongoing();
            const auto it = std::find_if(ongoing.begin(), ongoing.end(), [&](const OngoingEvent& o) {
                return rs.end_dyad(o.sender, o.receiver) == d;
            });
            if (it == ongoing.end()) throw std::logic_error("end dyad without an ongoing event");
            tr.kind = TransitionKind::end;
            tr.sender = it->sender;
            tr.receiver = it->receiver;
            tr.event = it->event;
            history.events[it->event].t_end = next;
        }
        engine.apply(tr);
        t = next;
    }
    history.observation_end = t;
    return history;
}

RecoverySummary recovery_study(const SimConfig& cfg, std::size_t replications, const GridSpec& grid, int workers,
                               const OptimizerOptions& options) {
    cfg.check();
    grid.check();
    RecoverySummary summary;
    for (Side side : {Side::start, Side::end}) {
        const std::string prefix = side == Side::start ? "start:" : "end:";
        summary.parameters.push_back(prefix + "baseline");
        for (const auto& s : cfg.spec.stats(side)) summary.parameters.push_back(prefix + s.label());
    }
    const auto truth = cfg.coef.stacked();
    summary.truth.assign(truth.data(), truth.data() + truth.size());
    summary.rows.resize(replications);

    auto run = [&](std::size_t rep) {
        RecoveryRow& out = summary.rows[rep];
        out.replication = rep;
        try {
            const auto history = simulate(cfg, rep);
            CovariateSet covariates = cfg.covariates;
            if (covariates.n_actors == 0) covariates.resize(cfg.actors);
            const GridSearchInput input{history, covariates, cfg.spec, cfg.weights.duration_floor};
            const auto fit = grid_search(input, grid, 1, options);
            out.psi_s = fit.psi_s;
            out.psi_e = fit.psi_e;
            out.tau = fit.tau;
            out.loglik = fit.loglik;
            const auto beta = fit.coef.stacked();
            out.estimate.assign(beta.data(), beta.data() + beta.size());
            if (!fit.inference.available) throw NumericError("standard errors unavailable: " + fit.inference.diagnostic);
            out.se = fit.inference.se;
            for (std::size_t k = 0; k < out.se.size(); ++k) {
                out.z.push_back((out.estimate[k] - summary.truth[k]) / out.se[k]);
            }
            out.ok = true;
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
    };

    const auto n_workers = static_cast<std::size_t>(std::max(1, workers));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, replications); ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < replications; k = next++) run(k);
        });
    }
    for (auto& th : pool) th.join();

    const std::size_t p = summary.parameters.size();
    summary.mean_z.assign(p, 0.0);
    summary.within_3se.assign(p, 0.0);
    summary.coverage_95.assign(p, 0.0);
    std::size_t ok = 0;
    for (const auto& r : summary.rows) {
        if (!r.ok) {
            ++summary.failures;
            continue;
        }
        ++ok;
        ++summary.selections[fmt::format("psi_s={} psi_e={} tau={}", text::format_double(r.psi_s), text::format_double(r.psi_e), format_tau(r.tau))];
        for (std::size_t k = 0; k < p; ++k) {
            summary.mean_z[k] += r.z[k];
            if (std::abs(r.z[k]) <= 3.0) summary.within_3se[k] += 1.0;
            if (std::abs(r.z[k]) <= 1.959963984540054) summary.coverage_95[k] += 1.0;
        }
    }
    for (std::size_t k = 0; k < p; ++k) {
        const double n = ok > 0 ? static_cast<double>(ok) : std::numeric_limits<double>::quiet_NaN();
        summary.mean_z[k] /= n;
        summary.within_3se[k] /= n;
        summary.coverage_95[k] /= n;
    }
    return summary;
}

void write_recovery(const RecoverySummary& summary, std::ostream& replications, std::ostream& summary_out) {
    replications << "replication,ok,psi_s,psi_e,tau,loglik";
    for (const auto& p : summary.parameters) replications << ",estimate:" << p;
    for (const auto& p : summary.parameters) replications << ",se:" << p;
    for (const auto& p : summary.parameters) replications << ",z:" << p;
    replications << ",error\n";
    for (const auto& r : summary.rows) {
        replications << r.replication << ',' << (r.ok ? 1 : 0);
        if (r.ok) {
            replications << ',' << text::format_double(r.psi_s) << ',' << text::format_double(r.psi_e) << ',' << format_tau(r.tau)
                         << ',' << text::format_double(r.loglik);
            for (const auto* v : {&r.estimate, &r.se, &r.z}) {
                for (double x : *v) replications << ',' << text::format_double(x);
            }
            replications << ",\n";
        } else {
            replications << ",NA,NA,NA,NA";
            for (std::size_t k = 0; k < 3 * summary.parameters.size(); ++k) replications << ",NA";
            std::string msg = r.error;
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            std::replace(msg.begin(), msg.end(), '"', '\'');
            replications << ",\"" << msg << "\"\n";
        }
    }

    summary_out << "parameter,truth,mean_z,within_3se,coverage_95\n";
    for (std::size_t k = 0; k < summary.parameters.size(); ++k) {
        summary_out << summary.parameters[k] << ',' << text::format_double(summary.truth[k]) << ','
                    << text::format_double(summary.mean_z[k]) << ',' << text::format_double(summary.within_3se[k]) << ','
                    << text::format_double(summary.coverage_95[k]) << '\n';
    }
    for (const auto& [key, count] : summary.selections) summary_out << "selected:" << key << ',' << count << ",,,\n";
    summary_out << "failures," << summary.failures << ",,,\n";
}

}  // namespace durem
