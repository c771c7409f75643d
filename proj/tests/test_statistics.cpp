#include "instances.hpp"
#include "oracle.hpp"

#include "durem/statistics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace durem {
namespace {

EventHistory read(const std::string& text) {
    std::istringstream in(text);
    return parse_event_history(in, ColumnMap{});
}

StatisticSpec stat(StatName name, Side side = Side::start, std::optional<std::string> cov = std::nullopt) {
    StatisticSpec s;
    s.name = name;
    s.side = side;
    s.covariate = std::move(cov);
    return s;
}

TEST(Accumulate, SingleEvent) {
    const auto h = read("sender,receiver,t_start,t_end\ni,j,0,4\nk,i,1,2\n");
    WeightParams p;
    p.psi_s = 0.25;
    auto adj = accumulate(h, 10.0, p, Side::start, Mode::directed);
    EXPECT_NEAR(adj.at(0, 1), std::sqrt(2.0), 1e-15);
    EXPECT_EQ(adj.at(1, 0), 0.0);
    EXPECT_EQ(adj.at(0, 2), 0.0);
}

TEST(Accumulate, CountsWithoutWeights) {
    const auto h = read("sender,receiver,t_start,t_end\ni,j,0,4\ni,j,5,9.5\ni,j,11,30\n");
    const auto adj = accumulate(h, 40.0, WeightParams{}, Side::end, Mode::directed);
    EXPECT_EQ(adj.at(0, 1), 3.0);
    EXPECT_EQ(adj.out_sum[0], 3.0);
    EXPECT_EQ(adj.in_sum[1], 3.0);
}

TEST(Accumulate, MatchesPerEventSum) {
    std::mt19937_64 rng(21);
    auto inst = testing::random_instance(rng, {5, 30, 1.0, true});
    while (inst.history.size() < 20) inst = testing::random_instance(rng, {5, 30, 1.0, true});
    WeightParams p;
    p.psi_s = 0.7;
    p.tau = 50.0;
    p.duration_floor = 1e-3;
    double t_end = 0.0;
    for (const auto& e : inst.history.events) t_end = std::max(t_end, e.t_end);
    const auto adj = accumulate(inst.history, t_end + 1.0, p, Side::start, Mode::directed);
    const std::size_t n = inst.history.n_actors();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double want = 0.0;
            for (const auto& e : inst.history.events) {
                if (e.sender != i || e.receiver != j) continue;
                const double elapsed = t_end + 1.0 - e.t_start;
                want += std::pow(std::max(e.duration(), 1e-3), 0.7) * std::exp(-elapsed * std::log(2.0) / 50.0) *
                        std::log(2.0) / 50.0;
            }
            EXPECT_NEAR(adj.at(i, j), want, 1e-12 * std::max(1.0, want));
        }
    }
}

TEST(Statistics, SameAttribute) {
    CovariateSet cov;
    cov.n_actors = 3;
    cov.attributes["g"] = {{"a", std::nullopt}, {"b", std::nullopt}, {"a", std::nullopt}};
    WeightedAdjacency adj(3);
    StatisticsOptions opts;
    const StatisticContext ctx{adj, cov, std::nullopt, {}, opts};
    EXPECT_EQ(compute_statistic(stat(StatName::same, Side::start, "g"), 0, 2, ctx), 1.0);
    EXPECT_EQ(compute_statistic(stat(StatName::same, Side::start, "g"), 0, 1, ctx), 0.0);
}

TEST(Statistics, DegreeDiffByHand) {
    // undirected: {A,B} twice, {B,C} once, all completed
    const auto h = read("sender,receiver,t_start,t_end\nA,B,0,1\nB,A,2,3\nB,C,4,5\n");
    const auto adj = accumulate(h, 10.0, WeightParams{}, Side::end, Mode::undirected);
    CovariateSet cov;
    StatisticsOptions opts;
    const StatisticContext ctx{adj, cov, std::nullopt, {}, opts};
    // degrees: A=2, B=3, C=1
    EXPECT_EQ(compute_statistic(stat(StatName::degree_diff), 0, 1, ctx), 1.0);
    EXPECT_EQ(compute_statistic(stat(StatName::degree_diff), 0, 2, ctx), 1.0);
    EXPECT_EQ(compute_statistic(stat(StatName::degree_diff), 1, 2, ctx), 2.0);
    EXPECT_EQ(compute_statistic(stat(StatName::totaldegree_dyad), 1, 2, ctx), 4.0);
    EXPECT_EQ(compute_statistic(stat(StatName::sp), 0, 2, ctx), 1.0);
}

TEST(Statistics, ParticipationShiftsAfterAStart) {
    WeightedAdjacency adj(4);
    CovariateSet cov;
    StatisticsOptions opts;
    const StatisticContext ctx{adj, cov, PreviousEvent{1, 0}, {}, opts};  // previous start (j, i) = (1, 0)
    EXPECT_EQ(compute_statistic(stat(StatName::ps_abba), 0, 1, ctx), 1.0);
    EXPECT_EQ(compute_statistic(stat(StatName::ps_abba), 1, 0, ctx), 0.0);
    EXPECT_EQ(compute_statistic(stat(StatName::ps_abba), 0, 2, ctx), 0.0);

    // apart from the repeat (1, 0), exactly one of the six shifts fires
    const StatName six[] = {StatName::ps_abba, StatName::ps_abay, StatName::ps_abby,
                            StatName::ps_abxa, StatName::ps_abxb, StatName::ps_abxy};
    for (ActorIndex i = 0; i < 4; ++i) {
        for (ActorIndex j = 0; j < 4; ++j) {
            if (i == j || (i == 1 && j == 0)) continue;
            double total = 0.0;
            for (auto s : six) total += compute_statistic(stat(s), i, j, ctx);
            EXPECT_EQ(total, 1.0) << i << "," << j;
        }
    }
}

TEST(Statistics, EngagedActor) {
    std::vector<OngoingEvent> none;
    EXPECT_EQ(engaged_actor(0, 1, none), 0.0);
    std::vector<OngoingEvent> one{{0, 2, 1.0, 0}};
    EXPECT_EQ(engaged_actor(0, 1, one), 1.0);
    EXPECT_EQ(engaged_actor(0, 2, one), 0.0);
    std::vector<OngoingEvent> two{{0, 2, 1.0, 0}, {3, 1, 2.0, 1}, {0, 3, 2.5, 2}};
    EXPECT_EQ(engaged_actor(0, 1, two), 3.0);
    EXPECT_EQ(engaged_actor(0, 1, two, EngagedMode::binary), 1.0);
}

TEST(Statistics, EngagedActorMatchesIntervalScan) {
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        auto inst = testing::random_instance(rng, {6, 25, 1.0, true});
        const auto seq = build_transitions(inst.history, inst.spec.dir);
        const auto order = testing::oracle_order(inst.history);
        for (std::size_t m = 0; m < seq.size(); ++m) {
            for (ActorIndex i = 0; i < inst.history.n_actors(); ++i) {
                for (ActorIndex j = 0; j < inst.history.n_actors(); ++j) {
                    if (i == j) continue;
                    // events started before position m and not yet ended
                    double want = 0.0;
                    for (std::size_t e = 0; e < inst.history.size(); ++e) {
                        bool started = false, ended = false;
                        for (std::size_t k = 0; k < m; ++k) {
                            if (order[k].event != e) continue;
                            (order[k].is_end ? ended : started) = true;
                        }
                        const auto& ev = inst.history.events[e];
                        const bool hi = ev.sender == i || ev.receiver == i;
                        const bool hj = ev.sender == j || ev.receiver == j;
                        if (started && !ended && hi != hj) want += 1.0;
                    }
                    ASSERT_EQ(engaged_actor(i, j, m, seq), want);
                }
            }
        }
    }
}

TEST(Statistics, ParsingAndScopes) {
    EXPECT_EQ(parse_statistic("inertia", Side::start).name, StatName::inertia);
    EXPECT_EQ(parse_statistic("psABBA", Side::end).name, StatName::ps_abba);
    EXPECT_EQ(parse_statistic("same( gender )", Side::start).covariate.value_or(""), "gender");
    EXPECT_THROW(parse_statistic("inertiaa", Side::start), ConfigError);
    EXPECT_THROW(parse_statistic("same", Side::start), ConfigError);
    EXPECT_THROW(parse_statistic("inertia(x)", Side::start), ConfigError);

    ModelSpec spec;
    spec.dir = parse_directionality("UU");
    spec.start_stats = {stat(StatName::reciprocity)};
    EXPECT_THROW(spec.check(), ConfigError);
    spec.start_stats = {stat(StatName::sp)};
    EXPECT_NO_THROW(spec.check());
    spec.start_stats = {stat(StatName::inertia), stat(StatName::inertia)};
    EXPECT_THROW(spec.check(), ConfigError);
}

TEST(Design, EmptyHistory) {
    EventHistory h;
    ModelSpec spec;
    spec.start_stats = {stat(StatName::inertia)};
    const auto seq = build_transitions(h, spec.dir);
    const auto d = build_design(seq, spec, h, CovariateSet{}, WeightParams{});
    EXPECT_EQ(d.size(), 0u);
    EXPECT_EQ(d.start.n_rows(), 0u);
}

TEST(Design, Table1InertiaByHand) {
    auto h = read("sender,receiver,t_start,t_end\nA,B,10,50\nA,C,20,70\nB,C,50,90\n");
    ModelSpec spec;
    spec.dir = parse_directionality("UU");
    spec.start_stats = {stat(StatName::inertia, Side::start)};
    spec.end_stats = {stat(StatName::inertia, Side::end)};
    const auto seq = build_transitions(h, spec.dir);
    const auto d = build_design(seq, spec, h, CovariateSet{}, WeightParams{});
    ASSERT_EQ(d.size(), 6u);
    // (dyad, value) per transition; dyads 0={A,B}, 1={A,C}, 2={B,C}
    using Rows = std::vector<std::pair<DyadIndex, double>>;
    const std::vector<Rows> start{{{0, 0}, {1, 0}, {2, 0}}, {{1, 0}, {2, 0}}, {{2, 0}},
                                  {{0, 1}, {2, 0}},         {{0, 1}},         {{0, 1}, {1, 1}}};
    const std::vector<Rows> end{{}, {{0, 0}}, {{0, 0}, {1, 0}}, {{1, 0}}, {{1, 0}, {2, 0}}, {{2, 0}}};
    for (std::size_t m = 0; m < 6; ++m) {
        for (Side side : {Side::start, Side::end}) {
            const auto& block = d.block(side);
            const auto& want = side == Side::start ? start[m] : end[m];
            ASSERT_EQ(block.end(m) - block.begin(m), want.size()) << "m=" << m;
            for (std::size_t r = 0; r < want.size(); ++r) {
                EXPECT_EQ(block.dyads[block.begin(m) + r], want[r].first);
                EXPECT_EQ(block.row(block.begin(m) + r)[0], want[r].second) << "m=" << m;
            }
        }
    }
}

TEST(Design, CountsAreIntegersWithoutWeights) {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 30; ++rep) {
        auto inst = testing::random_instance(rng);
        inst.weights.psi_s = inst.weights.psi_e = 0.0;
        inst.weights.tau.reset();
        const auto seq = build_transitions(inst.history, inst.spec.dir, inst.spec.origin);
        const auto d = build_design(seq, inst.spec, inst.history, inst.covariates, inst.weights);
        for (Side side : {Side::start, Side::end}) {
            const auto& block = d.block(side);
            const auto& stats = inst.spec.stats(side);
            for (std::size_t r = 0; r < block.n_rows(); ++r) {
                for (std::size_t k = 0; k < stats.size(); ++k) {
                    if (!info(stats[k].name).weighted) continue;
                    const double v = block.row(r)[k];
                    ASSERT_EQ(v, std::round(v)) << block.columns[k];
                }
            }
        }
    }
}

TEST(Design, StandardizedColumnsMatchOracle) {
    std::mt19937_64 rng(29);
    for (int rep = 0; rep < 30; ++rep) {
        auto inst = testing::random_instance(rng, {6, 40, 2.0, false});
        const auto seq = build_transitions(inst.history, inst.spec.dir, inst.spec.origin);
        const auto d = build_design(seq, inst.spec, inst.history, inst.covariates, inst.weights);
        const auto steps = testing::oracle_design(inst.history, inst.spec, inst.covariates, inst.weights);
        std::string why;
        EXPECT_TRUE(testing::matches_oracle(d, steps, 1e-10, why)) << why;
    }
}

TEST(Engine, MatchesFromScratchAdjacency) {
    std::mt19937_64 rng(33);
    for (int rep = 0; rep < 20; ++rep) {
        auto inst = testing::random_instance(rng);
        const auto seq = build_transitions(inst.history, inst.spec.dir);
        StatisticsEngine engine(inst.history.n_actors(), inst.spec, inst.covariates, inst.weights);
        for (std::size_t m = 0; m < seq.size(); ++m) {
            engine.apply(seq[m]);
            const double t = seq[m].time;
            if (m + 1 < seq.size() && seq[m + 1].time == t) continue;  // inclusive cutoff needs all ties applied
            engine.evaluate(t);
            const auto want = accumulate(inst.history, t, inst.weights, Side::end, inst.spec.dir.end,
                                         Eligibility::inclusive);
            const auto& got = engine.adjacency(Side::end);
            for (std::size_t k = 0; k < want.a.size(); ++k) {
                ASSERT_NEAR(got.a[k], want.a[k], 1e-12 * std::max(1.0, std::abs(want.a[k])));
            }
        }
    }
}

}  // namespace
}  // namespace durem
