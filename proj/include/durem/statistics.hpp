#pragma once

#include "durem/data.hpp"
#include "durem/riskset.hpp"
#include "durem/types.hpp"
#include "durem/weighting.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace durem {

enum class StatName {
    // a-based, both modes
    inertia,
    // a-based, directed
    reciprocity,
    indegree_sender,
    indegree_receiver,
    outdegree_sender,
    outdegree_receiver,
    totaldegree_sender,
    totaldegree_receiver,
    itp,
    otp,
    isp,
    osp,
    // a-based, undirected
    totaldegree_dyad,
    degree_min,
    degree_max,
    degree_diff,
    sp,
    // participation shifts (psABAY exists in both modes with different meaning)
    ps_abba,
    ps_abay,
    ps_abby,
    ps_abxa,
    ps_abxb,
    ps_abxy,
    ps_abab,
    // recency
    rrank_send,
    rrank_receive,
    recency_send_sender,
    recency_send_receiver,
    recency_receive_sender,
    recency_receive_receiver,
    recency_continue,
    // exogenous
    send,
    receive,
    same,
    difference,
    average,
    minimum,
    maximum,
    tie,
    // concurrency
    engaged_actor,
};

enum class StatScope { directed, undirected, both };
enum class CovariateKind { none, attribute, tie };

struct StatInfo {
    StatName name;
    std::string_view key;
    StatScope scope;
    CovariateKind covariate;
    bool weighted;  // built from a(t,i,j)
};

[[nodiscard]] const std::vector<StatInfo>& statistic_catalog();
[[nodiscard]] const StatInfo& info(StatName name);
// Case-insensitive lookup of a catalog key.
[[nodiscard]] std::optional<StatName> find_statistic(std::string_view key);

struct StatisticSpec {
    StatName name{StatName::inertia};
    Side side{Side::start};
    std::optional<std::string> covariate;
    bool standardize{false};

    // "inertia", "same(gender)", "tie(friend)"
    [[nodiscard]] std::string label() const;
};

// Parses "name" or "name(covariate)"; throws ConfigError naming the unknown
// statistic.
StatisticSpec parse_statistic(std::string_view text, Side side);

enum class PShiftReference { starts_only, any_transition };
enum class RecencyEmpty { zero, reciprocal };
enum class EngagedMode { count, binary };

struct StatisticsOptions {
    PShiftReference pshift_reference{PShiftReference::starts_only};
    RecencyEmpty recency_empty{RecencyEmpty::zero};
    EngagedMode engaged{EngagedMode::count};
};

struct ModelSpec {
    Directionality dir;
    std::vector<StatisticSpec> start_stats;
    std::vector<StatisticSpec> end_stats;
    StatisticsOptions options;
    TimeOrigin origin{TimeOrigin::first_event};
    bool censor_tail{false};

    [[nodiscard]] const std::vector<StatisticSpec>& stats(Side side) const {
        return side == Side::start ? start_stats : end_stats;
    }
    // Checks every statistic against its side's mode and, when given, that the
    // referenced covariates exist.
    void check(const CovariateSet* covariates = nullptr) const;
};

// Weighted history of one side at time t: a(t,i,j), its row/column sums and
// the recency anchors. Matrices are row-major n x n; undirected sides are
// symmetric. Anchors are NaN when no qualifying event exists.
struct WeightedAdjacency {
    Mode mode{Mode::directed};
    std::size_t n_actors{0};
    Time t{0.0};
    std::vector<double> a;
    std::vector<double> out_sum;
    std::vector<double> in_sum;
    std::vector<Time> last_dyad;
    std::vector<Time> last_send;
    std::vector<Time> last_receive;

    explicit WeightedAdjacency(std::size_t n = 0, Mode m = Mode::directed);

    [[nodiscard]] double at(ActorIndex i, ActorIndex j) const { return a[static_cast<std::size_t>(i) * n_actors + j]; }
    [[nodiscard]] Time last(ActorIndex i, ActorIndex j) const {
        return last_dyad[static_cast<std::size_t>(i) * n_actors + j];
    }
    void recompute_sums();
};

enum class Eligibility { strict, inclusive };

// From-scratch weighted adjacency at time t. The start side counts events
// with t_start < t (or <= t), the end side events with t_end < t (or <= t).
WeightedAdjacency accumulate(const EventHistory& history, Time t, const WeightParams& params, Side side, Mode mode,
                             Eligibility eligibility = Eligibility::strict);

struct PreviousEvent {
    ActorIndex sender{0};
    ActorIndex receiver{0};
};

struct StatisticContext {
    const WeightedAdjacency& adj;
    const CovariateSet& covariates;
    std::optional<PreviousEvent> previous;
    std::span<const OngoingEvent> ongoing;
    const StatisticsOptions& options;
};

// Value of one statistic for dyad (i, j) (canonical i < j on undirected sides).
[[nodiscard]] double compute_statistic(const StatisticSpec& spec, ActorIndex i, ActorIndex j,
                                       const StatisticContext& ctx);

// Ongoing events that involve exactly one of i, j.
[[nodiscard]] double engaged_actor(ActorIndex i, ActorIndex j, std::span<const OngoingEvent> ongoing,
                                   EngagedMode mode = EngagedMode::count);
// Same, for the ongoing set just before transition m of `seq`.
[[nodiscard]] double engaged_actor(ActorIndex i, ActorIndex j, std::size_t m, const TransitionSequence& seq,
                                   EngagedMode mode = EngagedMode::count);

// Streams transitions and keeps both sides' weighted histories, recency
// anchors and the dual risk set up to date. evaluate(t) refreshes the
// snapshots used for the next transition's rows. `covariates` must outlive
// the engine.
class StatisticsEngine {
public:
    StatisticsEngine(std::size_t n_actors, const ModelSpec& spec, const CovariateSet& covariates,
                     const WeightParams& params);

    void apply(const Transition& transition);
    void evaluate(Time t);

    [[nodiscard]] const RiskSetTracker& riskset() const { return riskset_; }
    [[nodiscard]] const WeightedAdjacency& adjacency(Side side) const;
    [[nodiscard]] std::optional<PreviousEvent> previous() const { return previous_; }

    // Writes the side's statistics for dyad `d` of that side's space into
    // `out` (one entry per statistic).
    void fill_row(Side side, DyadIndex d, std::span<double> out) const;

private:
    struct SideState {
        Side side;
        Mode mode;
        bool needs_matrix{false};
        WeightedAdjacency completed;  // decayed to `t_ref`
        WeightedAdjacency snapshot;
    };

    void advance(Time t);
    void add_completed(SideState& s, ActorIndex sender, ActorIndex receiver, double weight);
    void touch_anchors(SideState& s, ActorIndex sender, ActorIndex receiver, Time t);
    SideState& state(Side side) { return side == Side::start ? start_ : end_; }
    [[nodiscard]] const SideState& state(Side side) const { return side == Side::start ? start_ : end_; }

    ModelSpec spec_;
    const CovariateSet& covariates_;
    WeightParams params_;
    std::size_t n_;
    RiskSetTracker riskset_;
    SideState start_;
    SideState end_;
    Time t_ref_{0.0};
    std::optional<PreviousEvent> previous_;
};

// Rows of one side: for transition m, rows offsets[m]..offsets[m+1]-1, each
// holding one value per column.
struct DesignBlock {
    std::vector<std::string> columns;
    std::vector<std::size_t> offsets{0};
    std::vector<DyadIndex> dyads;
    std::vector<double> values;

    [[nodiscard]] std::size_t n_cols() const { return columns.size(); }
    [[nodiscard]] std::size_t n_rows() const { return dyads.size(); }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return {values.data() + r * n_cols(), n_cols()};
    }
    [[nodiscard]] std::size_t begin(std::size_t m) const { return offsets[m]; }
    [[nodiscard]] std::size_t end(std::size_t m) const { return offsets[m + 1]; }
};

struct DesignTransition {
    Time time{0.0};
    Time dt{0.0};
    // Empty for the censored tail interval, which has no observed transition.
    std::optional<Side> observed_side;
    std::size_t observed_row{0};  // global row index in the observed side's block
};

struct DesignArray {
    DesignBlock start;
    DesignBlock end;
    std::vector<DesignTransition> transitions;
    Directionality dir;
    std::size_t n_actors{0};

    [[nodiscard]] const DesignBlock& block(Side side) const { return side == Side::start ? start : end; }
    [[nodiscard]] std::size_t size() const { return transitions.size(); }
};

// Replaces flagged columns of rows [first, last) by their z-scores across
// those rows; constant columns are left as they are.
void standardize_rows(DesignBlock& block, std::size_t first, std::size_t last, const std::vector<StatisticSpec>& stats);

// Rows for every transition of `seq`, computed from the history before it.
// With spec.censor_tail and an observation end after the last transition, a
// final row set without an observed transition covers the remaining interval.
DesignArray build_design(const TransitionSequence& seq, const ModelSpec& spec, const EventHistory& history,
                         const CovariateSet& covariates, const WeightParams& params);

}  // namespace durem
