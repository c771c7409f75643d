#include "durem/statistics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

namespace durem {

namespace {

constexpr double kNever = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

const std::vector<StatInfo>& statistic_catalog() {
    using enum StatName;
    using S = StatScope;
    using C = CovariateKind;
    static const std::vector<StatInfo> catalog = {
        {inertia, "inertia", S::both, C::none, true},
        {reciprocity, "reciprocity", S::directed, C::none, true},
        {indegree_sender, "indegreeSender", S::directed, C::none, true},
        {indegree_receiver, "indegreeReceiver", S::directed, C::none, true},
        {outdegree_sender, "outdegreeSender", S::directed, C::none, true},
        {outdegree_receiver, "outdegreeReceiver", S::directed, C::none, true},
        {totaldegree_sender, "totaldegreeSender", S::directed, C::none, true},
        {totaldegree_receiver, "totaldegreeReceiver", S::directed, C::none, true},
        {itp, "itp", S::directed, C::none, true},
        {otp, "otp", S::directed, C::none, true},
        {isp, "isp", S::directed, C::none, true},
        {osp, "osp", S::directed, C::none, true},
        {totaldegree_dyad, "totaldegreeDyad", S::undirected, C::none, true},
        {degree_min, "degreeMin", S::undirected, C::none, true},
        {degree_max, "degreeMax", S::undirected, C::none, true},
        {degree_diff, "degreeDiff", S::undirected, C::none, true},
        {sp, "sp", S::undirected, C::none, true},
        {ps_abba, "psABBA", S::directed, C::none, false},
        {ps_abay, "psABAY", S::both, C::none, false},
        {ps_abby, "psABBY", S::directed, C::none, false},
        {ps_abxa, "psABXA", S::directed, C::none, false},
        {ps_abxb, "psABXB", S::directed, C::none, false},
        {ps_abxy, "psABXY", S::directed, C::none, false},
        {ps_abab, "psABAB", S::undirected, C::none, false},
        {rrank_send, "rrankSend", S::directed, C::none, false},
        {rrank_receive, "rrankReceive", S::directed, C::none, false},
        {recency_send_sender, "recencySendSender", S::directed, C::none, false},
        {recency_send_receiver, "recencySendReceiver", S::directed, C::none, false},
        {recency_receive_sender, "recencyReceiveSender", S::directed, C::none, false},
        {recency_receive_receiver, "recencyReceiveReceiver", S::directed, C::none, false},
        {recency_continue, "recencyContinue", S::both, C::none, false},
        {send, "send", S::directed, C::attribute, false},
        {receive, "receive", S::directed, C::attribute, false},
        {same, "same", S::both, C::attribute, false},
        {difference, "difference", S::both, C::attribute, false},
        {average, "average", S::both, C::attribute, false},
        {minimum, "minimum", S::both, C::attribute, false},
        {maximum, "maximum", S::both, C::attribute, false},
        {tie, "tie", S::both, C::tie, false},
        {engaged_actor, "engaged_actor", S::both, C::none, false},
    };
    return catalog;
}

const StatInfo& info(StatName name) { return statistic_catalog().at(static_cast<std::size_t>(name)); }

std::optional<StatName> find_statistic(std::string_view key) {
    const auto wanted = lower(key);
    for (const auto& entry : statistic_catalog()) {
        if (lower(entry.key) == wanted) return entry.name;
    }
    return std::nullopt;
}

std::string StatisticSpec::label() const {
    std::string out(info(name).key);
    if (covariate) out += "(" + *covariate + ")";
    return out;
}

StatisticSpec parse_statistic(std::string_view text_in, Side side) {
    std::string text(text_in);
    text.erase(std::remove_if(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); }), text.end());
    StatisticSpec spec;
    spec.side = side;
    std::string key = text;
    if (const auto open = text.find('('); open != std::string::npos) {
        if (text.back() != ')' || open + 2 > text.size() - 1) {
            throw ConfigError("malformed statistic '" + text + "'");
        }
        key = text.substr(0, open);
        spec.covariate = text.substr(open + 1, text.size() - open - 2);
    }
    const auto name = find_statistic(key);
    if (!name) throw ConfigError("unknown statistic '" + key + "'");
    spec.name = *name;
    const auto& entry = info(*name);
    if (entry.covariate != CovariateKind::none && !spec.covariate) {
        throw ConfigError("statistic '" + key + "' needs a covariate, e.g. " + std::string(entry.key) + "(name)");
    }
    if (entry.covariate == CovariateKind::none && spec.covariate) {
        throw ConfigError("statistic '" + key + "' takes no covariate");
    }
    return spec;
}

void ModelSpec::check(const CovariateSet* covariates) const {
    for (Side side : {Side::start, Side::end}) {
        const Mode mode = dir.mode(side);
        std::vector<std::string> seen;
        for (const auto& spec : stats(side)) {
            const auto& entry = info(spec.name);
            const auto where = fmt::format("{} model statistic '{}'", to_string(side), spec.label());
            if (spec.side != side) throw ConfigError(where + " is registered on the wrong side");
            if ((entry.scope == StatScope::directed && mode != Mode::directed) ||
                (entry.scope == StatScope::undirected && mode != Mode::undirected)) {
                throw ConfigError(fmt::format("{} is not available for {} events", where, to_string(mode)));
            }
            if (std::find(seen.begin(), seen.end(), spec.label()) != seen.end()) {
                throw ConfigError(where + " is listed twice");
            }
            seen.push_back(spec.label());
            if (!covariates) continue;
            if (entry.covariate == CovariateKind::attribute) {
                if (!covariates->has_attribute(*spec.covariate)) {
                    throw ConfigError(fmt::format("{} refers to unknown actor attribute '{}'", where, *spec.covariate));
                }
                if (spec.name != StatName::same) {
                    for (std::size_t a = 0; a < covariates->n_actors; ++a) {
                        (void)covariates->numeric_attribute(*spec.covariate, static_cast<ActorIndex>(a));
                    }
                }
            }
            if (entry.covariate == CovariateKind::tie && !covariates->has_tie(*spec.covariate)) {
                throw ConfigError(fmt::format("{} refers to unknown dyadic tie '{}'", where, *spec.covariate));
            }
        }
    }
}

WeightedAdjacency::WeightedAdjacency(std::size_t n, Mode m)
    : mode(m),
      n_actors(n),
      a(n * n, 0.0),
      out_sum(n, 0.0),
      in_sum(n, 0.0),
      last_dyad(n * n, kNever),
      last_send(n, kNever),
      last_receive(n, kNever) {}

void WeightedAdjacency::recompute_sums() {
    std::fill(out_sum.begin(), out_sum.end(), 0.0);
    std::fill(in_sum.begin(), in_sum.end(), 0.0);
    for (std::size_t i = 0; i < n_actors; ++i) {
        for (std::size_t j = 0; j < n_actors; ++j) {
            const double v = a[i * n_actors + j];
            out_sum[i] += v;
            in_sum[j] += v;
        }
    }
}

namespace {

void add_pair(std::vector<double>& matrix, std::size_t n, ActorIndex s, ActorIndex r, Mode mode, double w) {
    matrix[static_cast<std::size_t>(s) * n + r] += w;
    if (mode == Mode::undirected) matrix[static_cast<std::size_t>(r) * n + s] += w;
}

void set_later(Time& slot, Time t) {
    if (std::isnan(slot) || t > slot) slot = t;
}

void touch(WeightedAdjacency& adj, ActorIndex s, ActorIndex r, Time t) {
    const std::size_t n = adj.n_actors;
    set_later(adj.last_dyad[static_cast<std::size_t>(s) * n + r], t);
    if (adj.mode == Mode::undirected) set_later(adj.last_dyad[static_cast<std::size_t>(r) * n + s], t);
    set_later(adj.last_send[s], t);
    set_later(adj.last_receive[r], t);
}

}  // namespace

WeightedAdjacency accumulate(const EventHistory& history, Time t, const WeightParams& params, Side side, Mode mode,
                             Eligibility eligibility) {
    WeightedAdjacency adj(history.n_actors(), mode);
    adj.t = t;
    for (const auto& e : history.events) {
        const Time anchor = side == Side::start ? e.t_start : e.t_end;
        const bool eligible = eligibility == Eligibility::strict ? anchor < t : anchor <= t;
        if (!eligible) continue;
        add_pair(adj.a, adj.n_actors, e.sender, e.receiver, mode, event_weight(e, t, params, side));
        touch(adj, e.sender, e.receiver, anchor);
    }
    adj.recompute_sums();
    return adj;
}

double engaged_actor(ActorIndex i, ActorIndex j, std::span<const OngoingEvent> ongoing, EngagedMode mode) {
    double count = 0.0;
    for (const auto& o : ongoing) {
        const bool has_i = o.sender == i || o.receiver == i;
        const bool has_j = o.sender == j || o.receiver == j;
        if (has_i != has_j) count += 1.0;
    }
    if (mode == EngagedMode::binary) return count > 0.0 ? 1.0 : 0.0;
    return count;
}

double engaged_actor(ActorIndex i, ActorIndex j, std::size_t m, const TransitionSequence& seq, EngagedMode mode) {
    RiskSetTracker tracker(seq.n_actors, seq.dir);
    for (std::size_t k = 0; k < m && k < seq.size(); ++k) tracker.apply(seq[k]);
    return engaged_actor(i, j, tracker.ongoing(), mode);
}

namespace {

double recency(Time t, Time last, RecencyEmpty empty) {
    if (std::isnan(last)) return empty == RecencyEmpty::zero ? 0.0 : 1.0 / (t + 1.0);
    return 1.0 / (t - last + 1.0);
}

// 1 / (1 + number of partners contacted strictly later); 0 if never contacted.
template <typename LastOf>
double reciprocal_rank(std::size_t n, ActorIndex self, ActorIndex partner, LastOf last_of) {
    const Time mine = last_of(partner);
    if (std::isnan(mine)) return 0.0;
    std::size_t rank = 1;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == self || k == partner) continue;
        if (last_of(static_cast<ActorIndex>(k)) > mine) ++rank;
    }
    return 1.0 / static_cast<double>(rank);
}

}  // namespace

double compute_statistic(const StatisticSpec& spec, ActorIndex i, ActorIndex j, const StatisticContext& ctx) {
    const auto& adj = ctx.adj;
    const std::size_t n = adj.n_actors;
    const Time t = adj.t;
    auto a = [&](std::size_t x, std::size_t y) { return adj.a[x * n + y]; };
    auto sum_min = [&](auto first, auto second) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i || k == j) continue;
            total += std::min(first(k), second(k));
        }
        return total;
    };
    auto attr = [&](ActorIndex x) { return ctx.covariates.numeric_attribute(*spec.covariate, x); };
    const auto& prev = ctx.previous;

    switch (spec.name) {
        case StatName::inertia: return a(i, j);
        case StatName::reciprocity: return a(j, i);
        case StatName::indegree_sender: return adj.in_sum[i];
        case StatName::indegree_receiver: return adj.in_sum[j];
        case StatName::outdegree_sender: return adj.out_sum[i];
        case StatName::outdegree_receiver: return adj.out_sum[j];
        case StatName::totaldegree_sender: return adj.out_sum[i] + adj.in_sum[i];
        case StatName::totaldegree_receiver: return adj.out_sum[j] + adj.in_sum[j];
        case StatName::itp:
            return sum_min([&](std::size_t k) { return a(j, k); }, [&](std::size_t k) { return a(k, i); });
        case StatName::otp:
            return sum_min([&](std::size_t k) { return a(i, k); }, [&](std::size_t k) { return a(k, j); });
        case StatName::isp:
            return sum_min([&](std::size_t k) { return a(k, i); }, [&](std::size_t k) { return a(k, j); });
        case StatName::osp:
        case StatName::sp:
            return sum_min([&](std::size_t k) { return a(i, k); }, [&](std::size_t k) { return a(j, k); });
        case StatName::totaldegree_dyad: return adj.out_sum[i] + adj.out_sum[j];
        case StatName::degree_min: return std::min(adj.out_sum[i], adj.out_sum[j]);
        case StatName::degree_max: return std::max(adj.out_sum[i], adj.out_sum[j]);
        case StatName::degree_diff: return std::abs(adj.out_sum[i] - adj.out_sum[j]);

        case StatName::ps_abba: return prev && prev->sender == j && prev->receiver == i ? 1.0 : 0.0;
        case StatName::ps_abay:
            if (!prev) return 0.0;
            if (adj.mode == Mode::undirected) {
                const bool has_i = prev->sender == i || prev->receiver == i;
                const bool has_j = prev->sender == j || prev->receiver == j;
                return has_i != has_j ? 1.0 : 0.0;
            }
            return prev->sender == i && prev->receiver != j ? 1.0 : 0.0;
        case StatName::ps_abby: return prev && prev->receiver == i && prev->sender != j ? 1.0 : 0.0;
        case StatName::ps_abxa: return prev && prev->sender == j && prev->receiver != i ? 1.0 : 0.0;
        case StatName::ps_abxb: return prev && prev->receiver == j && prev->sender != i ? 1.0 : 0.0;
        case StatName::ps_abxy:
            return prev && prev->sender != i && prev->receiver != i && prev->sender != j && prev->receiver != j ? 1.0
                                                                                                                 : 0.0;
        case StatName::ps_abab:
            return prev && ((prev->sender == i && prev->receiver == j) || (prev->sender == j && prev->receiver == i))
                       ? 1.0
                       : 0.0;

        case StatName::rrank_send:
            return reciprocal_rank(n, i, j, [&](ActorIndex k) { return adj.last(i, k); });
        case StatName::rrank_receive:
            return reciprocal_rank(n, i, j, [&](ActorIndex k) { return adj.last(k, i); });
        case StatName::recency_send_sender: return recency(t, adj.last_send[i], ctx.options.recency_empty);
        case StatName::recency_send_receiver: return recency(t, adj.last_send[j], ctx.options.recency_empty);
        case StatName::recency_receive_sender: return recency(t, adj.last_receive[i], ctx.options.recency_empty);
        case StatName::recency_receive_receiver: return recency(t, adj.last_receive[j], ctx.options.recency_empty);
        case StatName::recency_continue: return recency(t, adj.last(i, j), ctx.options.recency_empty);

        case StatName::send: return attr(i);
        case StatName::receive: return attr(j);
        case StatName::same:
            return ctx.covariates.attribute(*spec.covariate, i) == ctx.covariates.attribute(*spec.covariate, j) ? 1.0
                                                                                                                : 0.0;
        case StatName::difference: return std::abs(attr(i) - attr(j));
        case StatName::average: return (attr(i) + attr(j)) / 2.0;
        case StatName::minimum: return std::min(attr(i), attr(j));
        case StatName::maximum: return std::max(attr(i), attr(j));
        case StatName::tie: return ctx.covariates.tie(*spec.covariate, i, j, adj.mode);
        case StatName::engaged_actor: return engaged_actor(i, j, ctx.ongoing, ctx.options.engaged);
    }
    throw ConfigError("unhandled statistic");
}

StatisticsEngine::StatisticsEngine(std::size_t n_actors, const ModelSpec& spec, const CovariateSet& covariates,
                                   const WeightParams& params)
    : spec_(spec),
      covariates_(covariates),
      params_(params),
      n_(n_actors),
      riskset_(n_actors, spec.dir),
      start_{Side::start, spec.dir.start, false, WeightedAdjacency(n_actors, spec.dir.start),
             WeightedAdjacency(n_actors, spec.dir.start)},
      end_{Side::end, spec.dir.end, false, WeightedAdjacency(n_actors, spec.dir.end),
           WeightedAdjacency(n_actors, spec.dir.end)} {
    params_.check();
    for (Side side : {Side::start, Side::end}) {
        auto& s = state(side);
        for (const auto& stat : spec_.stats(side)) s.needs_matrix = s.needs_matrix || info(stat.name).weighted;
    }
}

const WeightedAdjacency& StatisticsEngine::adjacency(Side side) const { return state(side).snapshot; }

void StatisticsEngine::advance(Time t) {
    if (!(t > t_ref_)) return;
    if (params_.tau) {
        const double factor = std::exp(-(t - t_ref_) * std::numbers::ln2 / *params_.tau);
        for (auto* s : {&start_, &end_}) {
            if (!s->needs_matrix) continue;
            for (auto& v : s->completed.a) v *= factor;
        }
    }
    t_ref_ = t;
}

void StatisticsEngine::add_completed(SideState& s, ActorIndex sender, ActorIndex receiver, double weight) {
    if (!s.needs_matrix) return;
    add_pair(s.completed.a, n_, sender, receiver, s.mode, weight);
}

void StatisticsEngine::touch_anchors(SideState& s, ActorIndex sender, ActorIndex receiver, Time t) {
    touch(s.completed, sender, receiver, t);
}

void StatisticsEngine::apply(const Transition& tr) {
    advance(tr.time);
    const PreviousEvent acted{tr.sender, tr.receiver};
    if (tr.kind == TransitionKind::start) {
        riskset_.apply(tr);
        touch_anchors(start_, tr.sender, tr.receiver, tr.time);
        previous_ = acted;
        return;
    }
    const auto ongoing = riskset_.ongoing();
    const auto it = std::find_if(ongoing.begin(), ongoing.end(), [&](const OngoingEvent& o) { return o.event == tr.event; });
    const Time t_start = it != ongoing.end() ? it->t_start : tr.time;
    riskset_.apply(tr);
    const double duration = tr.time - t_start;
    add_completed(start_, tr.sender, tr.receiver,
                  duration_weight(duration, params_.psi_s, params_.duration_floor) *
                      memory_weight(tr.time - t_start, params_.tau));
    add_completed(end_, tr.sender, tr.receiver,
                  duration_weight(duration, params_.psi_e, params_.duration_floor) * memory_weight(0.0, params_.tau));
    touch_anchors(end_, tr.sender, tr.receiver, tr.time);
    if (spec_.options.pshift_reference == PShiftReference::any_transition) previous_ = acted;
}

void StatisticsEngine::evaluate(Time t) {
    advance(t);
    for (auto* s : {&start_, &end_}) {
        auto& snap = s->snapshot;
        snap.t = t;
        snap.last_dyad = s->completed.last_dyad;
        snap.last_send = s->completed.last_send;
        snap.last_receive = s->completed.last_receive;
        if (!s->needs_matrix) continue;
        snap.a = s->completed.a;
        if (s->side == Side::start) {
            // Running events count with the duration observed so far.
            for (const auto& o : riskset_.ongoing()) {
                const double w = duration_weight(t - o.t_start, params_.psi_s, params_.duration_floor) *
                                 memory_weight(t - o.t_start, params_.tau);
                add_pair(snap.a, n_, o.sender, o.receiver, s->mode, w);
            }
        }
        snap.recompute_sums();
    }
}

void StatisticsEngine::fill_row(Side side, DyadIndex d, std::span<double> out) const {
    const auto& s = state(side);
    const auto [i, j] = riskset_.space(side).actors(d);
    const StatisticContext ctx{s.snapshot, covariates_, previous_, riskset_.ongoing(), spec_.options};
    const auto& stats = spec_.stats(side);
    for (std::size_t k = 0; k < stats.size(); ++k) out[k] = compute_statistic(stats[k], i, j, ctx);
}

namespace {


}  // namespace

void standardize_rows(DesignBlock& block, std::size_t first, std::size_t last, const std::vector<StatisticSpec>& stats) {
    const std::size_t p = block.n_cols();
    const std::size_t count = last - first;
    if (count < 2) return;
    for (std::size_t k = 0; k < p; ++k) {
        if (!stats[k].standardize) continue;
        double mean = 0.0;
        for (std::size_t r = first; r < last; ++r) mean += block.values[r * p + k];
        mean /= static_cast<double>(count);
        double ss = 0.0;
        for (std::size_t r = first; r < last; ++r) {
            const double dev = block.values[r * p + k] - mean;
            ss += dev * dev;
        }
        const double sd = std::sqrt(ss / static_cast<double>(count));
        if (!(sd > 0.0)) continue;
        for (std::size_t r = first; r < last; ++r) block.values[r * p + k] = (block.values[r * p + k] - mean) / sd;
    }
}

DesignArray build_design(const TransitionSequence& seq, const ModelSpec& spec, const EventHistory& history,
                         const CovariateSet& covariates, const WeightParams& params) {
    spec.check(&covariates);
    DesignArray design;
    design.dir = spec.dir;
    design.n_actors = seq.n_actors;
    for (const auto& s : spec.start_stats) design.start.columns.push_back(s.label());
    for (const auto& s : spec.end_stats) design.end.columns.push_back(s.label());

    StatisticsEngine engine(seq.n_actors, spec, covariates, params);
    std::vector<double> row;

    auto emit_rows = [&](std::size_t m, Time t) -> std::pair<std::size_t, std::size_t> {
        engine.evaluate(t);
        const auto& rs = engine.riskset();
        std::pair<std::size_t, std::size_t> first_rows{design.start.n_rows(), design.end.n_rows()};
        for (Side side : {Side::start, Side::end}) {
            auto& block = side == Side::start ? design.start : design.end;
            const auto& space = rs.space(side);
            const std::size_t first = block.n_rows();
            row.resize(block.n_cols());
            for (DyadIndex d = 0; d < space.size(); ++d) {
                const bool at_risk = side == Side::start ? rs.at_risk_to_start(d) : rs.at_risk_to_end(d);
                if (!at_risk) continue;
                engine.fill_row(side, d, row);
                for (std::size_t k = 0; k < row.size(); ++k) {
                    if (!std::isfinite(row[k])) {
                        throw NumericError(fmt::format(
                            "non-finite value in {} model column '{}' at transition {} (psi={}, tau={}, floor={})",
                            to_string(side), block.columns[k], m, params.psi(side),
                            params.tau ? fmt::format("{}", *params.tau) : "none", params.duration_floor));
                    }
                }
                block.dyads.push_back(d);
                block.values.insert(block.values.end(), row.begin(), row.end());
            }
            standardize_rows(block, first, block.n_rows(), spec.stats(side));
            block.offsets.push_back(block.n_rows());
        }
        return first_rows;
    };

    for (std::size_t m = 0; m < seq.size(); ++m) {
        const auto& tr = seq[m];
        const Time t_eval = m == 0 ? seq.origin : seq[m - 1].time;
        const auto [start_first, end_first] = emit_rows(m, t_eval);

        DesignTransition dt;
        dt.time = tr.time;
        dt.dt = seq.inter_times[m];
        const Side side = tr.kind == TransitionKind::start ? Side::start : Side::end;
        const auto& rs = engine.riskset();
        const DyadIndex observed =
            side == Side::start ? rs.start_dyad(tr.sender, tr.receiver) : rs.end_dyad(tr.sender, tr.receiver);
        const auto& block = design.block(side);
        const std::size_t first = side == Side::start ? start_first : end_first;
        const auto found = std::find(block.dyads.begin() + static_cast<std::ptrdiff_t>(first), block.dyads.end(), observed);
        if (found == block.dyads.end()) {
            throw DataError(fmt::format("transition {}: observed dyad is not in the {} risk set", m, to_string(side)));
        }
        dt.observed_side = side;
        dt.observed_row = static_cast<std::size_t>(found - block.dyads.begin());
        design.transitions.push_back(dt);
        engine.apply(tr);
    }

    if (spec.censor_tail && history.observation_end && seq.size() > 0 &&
        *history.observation_end > seq.transitions.back().time) {
        const Time last = seq.transitions.back().time;
        emit_rows(seq.size(), last);
        DesignTransition tail;
        tail.time = *history.observation_end;
        tail.dt = *history.observation_end - last;
        design.transitions.push_back(tail);
    }
    return design;
}

}  // namespace durem
