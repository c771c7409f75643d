#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>

namespace durem::testing {

std::vector<OracleTransition> oracle_order(const EventHistory& history) {
    // (time, class, event, sub): ends of earlier-started events sort first at a
    // shared time; a zero-length event ends right after its own start.
    using Key = std::tuple<double, int, std::size_t, int>;
    std::vector<std::pair<Key, OracleTransition>> keyed;
    for (std::size_t e = 0; e < history.events.size(); ++e) {
        const auto& ev = history.events[e];
        keyed.push_back({{ev.t_start, 1, e, 0}, {ev.t_start, e, false}});
        const bool zero = ev.t_end == ev.t_start;
        keyed.push_back({{ev.t_end, zero ? 1 : 0, e, zero ? 1 : 0}, {ev.t_end, e, true}});
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<OracleTransition> out;
    for (const auto& [key, tr] : keyed) out.push_back(tr);
    return out;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SideView {
    Mode mode;
    std::size_t n;
    std::vector<double> a;
    std::vector<double> last_pair, last_send, last_receive;

    double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
    double out_degree(std::size_t i) const {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += a[i * n + k];
        return s;
    }
    double in_degree(std::size_t i) const {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += a[k * n + i];
        return s;
    }
};

void later(double& slot, double t) {
    if (std::isnan(slot) || t > slot) slot = t;
}

double power_weight(double d, double psi, double floor) {
    if (psi == 0.0) return 1.0;
    return std::pow(std::max(d, floor), psi);
}

double memory(double elapsed, const std::optional<double>& tau) {
    if (!tau) return 1.0;
    return std::exp(-elapsed * std::log(2.0) / *tau) * std::log(2.0) / *tau;
}

double recency_value(double t, double last, RecencyEmpty empty) {
    if (std::isnan(last)) return empty == RecencyEmpty::zero ? 0.0 : 1.0 / (t + 1.0);
    return 1.0 / (t - last + 1.0);
}

double numeric(const CovariateSet& cov, const std::string& name, ActorIndex a) {
    return *cov.attributes.at(name)[a].number;
}

double statistic(const StatisticSpec& spec, std::size_t i, std::size_t j, const SideView& v, double t,
                 const std::optional<std::pair<std::size_t, std::size_t>>& prev,
                 const std::vector<std::pair<std::size_t, std::size_t>>& ongoing, const CovariateSet& cov,
                 const StatisticsOptions& opts) {
    const std::size_t n = v.n;
    auto twopath = [&](auto f) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k != i && k != j) s += f(k);
        }
        return s;
    };
    auto in_prev = [&](std::size_t x) { return prev && (prev->first == x || prev->second == x); };
    auto rank = [&](auto last_with) {
        const double mine = last_with(j);
        if (std::isnan(mine)) return 0.0;
        double r = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k != i && k != j && last_with(k) > mine) r += 1.0;
        }
        return 1.0 / r;
    };
    const auto& c = spec.covariate;
    switch (spec.name) {
        case StatName::inertia: return v.at(i, j);
        case StatName::reciprocity: return v.at(j, i);
        case StatName::indegree_sender: return v.in_degree(i);
        case StatName::indegree_receiver: return v.in_degree(j);
        case StatName::outdegree_sender: return v.out_degree(i);
        case StatName::outdegree_receiver: return v.out_degree(j);
        case StatName::totaldegree_sender: return v.out_degree(i) + v.in_degree(i);
        case StatName::totaldegree_receiver: return v.out_degree(j) + v.in_degree(j);
        case StatName::itp: return twopath([&](std::size_t k) { return std::min(v.at(j, k), v.at(k, i)); });
        case StatName::otp: return twopath([&](std::size_t k) { return std::min(v.at(i, k), v.at(k, j)); });
        case StatName::isp: return twopath([&](std::size_t k) { return std::min(v.at(k, i), v.at(k, j)); });
        case StatName::osp:
        case StatName::sp: return twopath([&](std::size_t k) { return std::min(v.at(i, k), v.at(j, k)); });
        case StatName::totaldegree_dyad: return v.out_degree(i) + v.out_degree(j);
        case StatName::degree_min: return std::min(v.out_degree(i), v.out_degree(j));
        case StatName::degree_max: return std::max(v.out_degree(i), v.out_degree(j));
        case StatName::degree_diff: return std::abs(v.out_degree(i) - v.out_degree(j));
        case StatName::ps_abba: return prev && prev->first == j && prev->second == i;
        case StatName::ps_abay:
            if (v.mode == Mode::undirected) return in_prev(i) + in_prev(j) == 1;
            return prev && prev->first == i && prev->second != j;
        case StatName::ps_abby: return prev && prev->second == i && prev->first != j;
        case StatName::ps_abxa: return prev && prev->first == j && prev->second != i;
        case StatName::ps_abxb: return prev && prev->second == j && prev->first != i;
        case StatName::ps_abxy: return prev && !in_prev(i) && !in_prev(j);
        case StatName::ps_abab: return prev && in_prev(i) && in_prev(j);
        case StatName::rrank_send: return rank([&](std::size_t k) { return v.last_pair[i * n + k]; });
        case StatName::rrank_receive: return rank([&](std::size_t k) { return v.last_pair[k * n + i]; });
        case StatName::recency_send_sender: return recency_value(t, v.last_send[i], opts.recency_empty);
        case StatName::recency_send_receiver: return recency_value(t, v.last_send[j], opts.recency_empty);
        case StatName::recency_receive_sender: return recency_value(t, v.last_receive[i], opts.recency_empty);
        case StatName::recency_receive_receiver: return recency_value(t, v.last_receive[j], opts.recency_empty);
        case StatName::recency_continue: return recency_value(t, v.last_pair[i * n + j], opts.recency_empty);
        case StatName::send: return numeric(cov, *c, i);
        case StatName::receive: return numeric(cov, *c, j);
        case StatName::same: return cov.attributes.at(*c)[i].text == cov.attributes.at(*c)[j].text;
        case StatName::difference: return std::abs(numeric(cov, *c, i) - numeric(cov, *c, j));
        case StatName::average: return 0.5 * (numeric(cov, *c, i) + numeric(cov, *c, j));
        case StatName::minimum: return std::min(numeric(cov, *c, i), numeric(cov, *c, j));
        case StatName::maximum: return std::max(numeric(cov, *c, i), numeric(cov, *c, j));
        case StatName::tie: return cov.ties.at(*c)[i * n + j];
        case StatName::engaged_actor: {
            double count = 0.0;
            for (const auto& [s, r] : ongoing) {
                const bool hi = s == i || r == i;
                const bool hj = s == j || r == j;
                if (hi != hj) count += 1.0;
            }
            return opts.engaged == EngagedMode::binary ? (count > 0.0) : count;
        }
    }
    return kNaN;
}

void zscore(std::vector<OracleRow>& rows, const std::vector<StatisticSpec>& stats) {
    if (rows.size() < 2) return;
    for (std::size_t k = 0; k < stats.size(); ++k) {
        if (!stats[k].standardize) continue;
        double mean = 0.0;
        for (const auto& r : rows) mean += r.values[k];
        mean /= static_cast<double>(rows.size());
        double var = 0.0;
        for (const auto& r : rows) var += (r.values[k] - mean) * (r.values[k] - mean);
        const double sd = std::sqrt(var / static_cast<double>(rows.size()));
        if (sd == 0.0) continue;
        for (auto& r : rows) r.values[k] = (r.values[k] - mean) / sd;
    }
}

}  // namespace

std::vector<OracleStep> oracle_design(const EventHistory& history, const ModelSpec& spec,
                                      const CovariateSet& covariates, const WeightParams& params) {
    const auto order = oracle_order(history);
    const std::size_t n = history.n_actors();
    const auto& events = history.events;
    const bool coarse_undirected = spec.dir.coarse() == Mode::undirected;
    const double origin = spec.origin == TimeOrigin::zero || order.empty() ? 0.0 : order.front().time;

    std::vector<OracleStep> steps;
    for (std::size_t m = 0; m < order.size(); ++m) {
        const double t = m == 0 ? origin : order[m - 1].time;
        std::vector<char> started(events.size(), 0), ended(events.size(), 0);
        std::optional<std::pair<std::size_t, std::size_t>> prev;
        for (std::size_t k = 0; k < m; ++k) {
            const auto& ev = events[order[k].event];
            (order[k].is_end ? ended : started)[order[k].event] = 1;
            if (!order[k].is_end || spec.options.pshift_reference == PShiftReference::any_transition) {
                prev = std::pair<std::size_t, std::size_t>{ev.sender, ev.receiver};
            }
        }
        std::vector<std::pair<std::size_t, std::size_t>> ongoing;
        for (std::size_t e = 0; e < events.size(); ++e) {
            if (started[e] && !ended[e]) ongoing.emplace_back(events[e].sender, events[e].receiver);
        }

        auto view = [&](Side side) {
            SideView v{spec.dir.mode(side), n, std::vector<double>(n * n, 0.0), std::vector<double>(n * n, kNaN),
                       std::vector<double>(n, kNaN), std::vector<double>(n, kNaN)};
            for (std::size_t e = 0; e < events.size(); ++e) {
                const auto& ev = events[e];
                double w = 0.0, anchor = 0.0;
                if (side == Side::start) {
                    if (!started[e]) continue;
                    anchor = ev.t_start;
                    const double d = ended[e] ? ev.t_end - ev.t_start : t - ev.t_start;
                    w = power_weight(d, params.psi_s, params.duration_floor) * memory(t - anchor, params.tau);
                } else {
                    if (!ended[e]) continue;
                    anchor = ev.t_end;
                    w = power_weight(ev.t_end - ev.t_start, params.psi_e, params.duration_floor) *
                        memory(t - anchor, params.tau);
                }
                v.a[ev.sender * n + ev.receiver] += w;
                later(v.last_pair[ev.sender * n + ev.receiver], anchor);
                if (v.mode == Mode::undirected) {
                    v.a[ev.receiver * n + ev.sender] += w;
                    later(v.last_pair[ev.receiver * n + ev.sender], anchor);
                }
                later(v.last_send[ev.sender], anchor);
                later(v.last_receive[ev.receiver], anchor);
            }
            return v;
        };

        auto busy = [&](std::size_t i, std::size_t j, bool either_way) {
            for (const auto& [s, r] : ongoing) {
                if ((s == i && r == j) || (either_way && s == j && r == i)) return true;
            }
            return false;
        };

        OracleStep step;
        step.time = order[m].time;
        step.eval = t;
        const auto& ev = events[order[m].event];
        step.observed_start = !order[m].is_end;
        step.sender = ev.sender;
        step.receiver = ev.receiver;
        for (Side side : {Side::start, Side::end}) {
            const SideView v = view(side);
            const auto& stats = spec.stats(side);
            auto& rows = side == Side::start ? step.start_rows : step.end_rows;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (i == j || (v.mode == Mode::undirected && j < i)) continue;
                    const bool unordered = v.mode == Mode::undirected || (side == Side::start && coarse_undirected);
                    const bool in_set = side == Side::start ? !busy(i, j, unordered) : busy(i, j, unordered);
                    if (!in_set) continue;
                    OracleRow row{static_cast<ActorIndex>(i), static_cast<ActorIndex>(j), {}};
                    for (const auto& s : stats) {
                        row.values.push_back(statistic(s, i, j, v, t, prev, ongoing, covariates, spec.options));
                    }
                    rows.push_back(std::move(row));
                }
            }
            zscore(rows, stats);
        }
        steps.push_back(std::move(step));
    }
    return steps;
}

}  // namespace durem::testing

namespace durem::testing {

bool matches_oracle(const DesignArray& design, const std::vector<OracleStep>& steps, double tol, std::string& why) {
    if (design.size() != steps.size()) {
        why = "transition count " + std::to_string(design.size()) + " vs " + std::to_string(steps.size());
        return false;
    }
    for (std::size_t m = 0; m < steps.size(); ++m) {
        const auto& step = steps[m];
        const auto& tr = design.transitions[m];
        const std::string at = "transition " + std::to_string(m) + ": ";
        if (tr.time != step.time) {
            why = at + "time differs";
            return false;
        }
        for (Side side : {Side::start, Side::end}) {
            const auto& block = design.block(side);
            const auto& rows = side == Side::start ? step.start_rows : step.end_rows;
            const DyadSpace space(design.n_actors, design.dir.mode(side));
            const std::string where = at + std::string(to_string(side)) + " side: ";
            if (block.end(m) - block.begin(m) != rows.size()) {
                why = where + "risk set size " + std::to_string(block.end(m) - block.begin(m)) + " vs " +
                      std::to_string(rows.size());
                return false;
            }
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const std::size_t global = block.begin(m) + r;
                const auto [i, j] = space.actors(block.dyads[global]);
                if (i != rows[r].i || j != rows[r].j) {
                    why = where + "dyad order differs";
                    return false;
                }
                const auto got = block.row(global);
                for (std::size_t k = 0; k < got.size(); ++k) {
                    const double want = rows[r].values[k];
                    const double scale = std::max({1.0, std::abs(want), std::abs(got[k])});
                    if (!(std::abs(got[k] - want) <= tol * scale)) {
                        why = where + "column " + block.columns[k] + " dyad (" + std::to_string(i) + "," +
                              std::to_string(j) + ") got " + std::to_string(got[k]) + " want " + std::to_string(want);
                        return false;
                    }
                }
            }
            if (tr.observed_side == side) {
                const auto [i, j] = space.actors(block.dyads[tr.observed_row]);
                const auto want = space.actors(space.index(step.sender, step.receiver));
                if ((side == Side::start) != step.observed_start || i != want.first || j != want.second) {
                    why = at + "observed transition differs";
                    return false;
                }
            }
        }
    }
    return true;
}

}  // namespace durem::testing
