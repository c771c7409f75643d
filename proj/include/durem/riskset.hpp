#pragma once

#include "durem/data.hpp"
#include "durem/types.hpp"

#include <span>
#include <vector>

namespace durem {

enum class TransitionKind { start, end };

struct Transition {
    std::size_t index{0};  // 0-based position in the sequence
    Time time{0.0};
    ActorIndex sender{0};  // orientation of the source event
    ActorIndex receiver{0};
    TransitionKind kind{TransitionKind::start};
    std::size_t event{0};  // index into EventHistory::events
};

// Where the first inter-transition interval is measured from.
enum class TimeOrigin { first_event, zero };

struct TransitionSequence {
    std::vector<Transition> transitions;
    // t_m - t_{m-1}; the first entry is measured from `origin`.
    std::vector<Time> inter_times;
    Time origin{0.0};
    Directionality dir;
    std::size_t n_actors{0};

    [[nodiscard]] std::size_t size() const { return transitions.size(); }
    [[nodiscard]] const Transition& operator[](std::size_t m) const { return transitions[m]; }
};

// Each event yields a start and an end transition in the order given by
// ordered_transitions(). Throws DataError when a dyad starts while it is
// ongoing or ends while it is not.
TransitionSequence build_transitions(const EventHistory& history, Directionality dir,
                                     TimeOrigin origin = TimeOrigin::first_event);

struct OngoingEvent {
    ActorIndex sender{0};
    ActorIndex receiver{0};
    Time t_start{0.0};
    std::size_t event{0};
};

struct RiskSetState {
    std::vector<DyadIndex> at_start;  // start-mode dyads, ascending
    std::vector<DyadIndex> at_end;    // end-mode dyads, ascending
    std::vector<Time> ongoing_since;  // aligned with at_end

    friend bool operator==(const RiskSetState&, const RiskSetState&) = default;
};

// Incrementally maintained dual risk set. A dyad leaves the start risk set
// while an event on it (in the coarse representation) is ongoing; in mixed
// modes an ongoing unordered pair blocks both ordered start dyads.
class RiskSetTracker {
public:
    RiskSetTracker(std::size_t n_actors, Directionality dir);

    void apply(const Transition& transition);

    [[nodiscard]] const DyadSpace& space(Side side) const { return side == Side::start ? start_space_ : end_space_; }
    [[nodiscard]] bool at_risk_to_start(DyadIndex d) const { return blocked_[d] == 0; }
    [[nodiscard]] bool at_risk_to_end(DyadIndex d) const { return ongoing_event_[d] != kNone; }
    [[nodiscard]] std::span<const OngoingEvent> ongoing() const { return ongoing_; }
    [[nodiscard]] std::size_t n_at_start() const { return n_at_start_; }
    [[nodiscard]] std::size_t n_at_end() const { return ongoing_.size(); }
    [[nodiscard]] RiskSetState state() const;

    [[nodiscard]] DyadIndex start_dyad(ActorIndex sender, ActorIndex receiver) const {
        return start_space_.index(sender, receiver);
    }
    [[nodiscard]] DyadIndex end_dyad(ActorIndex sender, ActorIndex receiver) const {
        return end_space_.index(sender, receiver);
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    std::vector<DyadIndex> blocked_start_dyads(ActorIndex sender, ActorIndex receiver) const;

    Directionality dir_;
    DyadSpace start_space_;
    DyadSpace end_space_;
    std::vector<int> blocked_;              // per start dyad
    std::vector<std::size_t> ongoing_event_;  // per end dyad: event index or kNone
    std::vector<OngoingEvent> ongoing_;     // in start order
    std::size_t n_at_start_{0};
};

// State immediately before transition m (0-based), rebuilt from scratch.
RiskSetState riskset_at(const TransitionSequence& seq, std::size_t m);

struct TimelineRow {
    Time time{0.0};
    RiskSetState state;
    bool terminal{false};  // state after the last transition
};

// One row per distinct transition time (state before the first transition
// at that time) plus a terminal row at `observation_end`, or at the last
// transition time when no observation end is known.
std::vector<TimelineRow> riskset_timeline(const TransitionSequence& seq, std::optional<Time> observation_end);

}  // namespace durem
