#include "durem/riskset.hpp"

#include <algorithm>
#include <string>

namespace durem {

TransitionSequence build_transitions(const EventHistory& history, Directionality dir, TimeOrigin origin) {
    TransitionSequence seq;
    seq.dir = dir;
    seq.n_actors = history.n_actors();
    const auto keys = ordered_transitions(history.events);
    seq.transitions.reserve(keys.size());
    for (const auto& key : keys) {
        const auto& ev = history.events[key.event];
        Transition tr;
        tr.index = seq.transitions.size();
        tr.time = key.is_end ? ev.t_end : ev.t_start;
        tr.sender = ev.sender;
        tr.receiver = ev.receiver;
        tr.kind = key.is_end ? TransitionKind::end : TransitionKind::start;
        tr.event = key.event;
        seq.transitions.push_back(tr);
    }
    seq.origin = (origin == TimeOrigin::zero || seq.transitions.empty()) ? 0.0 : seq.transitions.front().time;
    seq.inter_times.reserve(seq.transitions.size());
    Time previous = seq.origin;
    for (const auto& tr : seq.transitions) {
        seq.inter_times.push_back(tr.time - previous);
        previous = tr.time;
    }

    // Replaying catches same-dyad overlaps that validation would also report.
    RiskSetTracker tracker(seq.n_actors, dir);
    for (const auto& tr : seq.transitions) tracker.apply(tr);
    return seq;
}

RiskSetTracker::RiskSetTracker(std::size_t n_actors, Directionality dir)
    : dir_(dir),
      start_space_(n_actors, dir.start),
      end_space_(n_actors, dir.end),
      blocked_(start_space_.size(), 0),
      ongoing_event_(end_space_.size(), kNone),
      n_at_start_(start_space_.size()) {}

std::vector<DyadIndex> RiskSetTracker::blocked_start_dyads(ActorIndex sender, ActorIndex receiver) const {
    if (dir_.start == Mode::directed && dir_.coarse() == Mode::undirected) {
        return {start_space_.index(sender, receiver), start_space_.index(receiver, sender)};
    }
    return {start_space_.index(sender, receiver)};
}

void RiskSetTracker::apply(const Transition& tr) {
    const DyadIndex end_d = end_space_.index(tr.sender, tr.receiver);
    const auto dyads = blocked_start_dyads(tr.sender, tr.receiver);
    if (tr.kind == TransitionKind::start) {
        for (auto d : dyads) {
            if (blocked_[d] != 0) {
                throw DataError("transition " + std::to_string(tr.index) + ": dyad starts while an event on it is ongoing");
            }
        }
        if (ongoing_event_[end_d] != kNone) {
            throw DataError("transition " + std::to_string(tr.index) + ": dyad starts while an event on it is ongoing");
        }
        for (auto d : dyads) {
            blocked_[d] = 1;
            --n_at_start_;
        }
        ongoing_event_[end_d] = tr.event;
        ongoing_.push_back({tr.sender, tr.receiver, tr.time, tr.event});
        return;
    }
    if (ongoing_event_[end_d] != tr.event) {
        throw DataError("transition " + std::to_string(tr.index) + ": end of an event that is not ongoing");
    }
    ongoing_event_[end_d] = kNone;
    for (auto d : dyads) {
        blocked_[d] = 0;
        ++n_at_start_;
    }
    const auto it = std::find_if(ongoing_.begin(), ongoing_.end(),
                                 [&](const OngoingEvent& o) { return o.event == tr.event; });
    ongoing_.erase(it);
}

RiskSetState RiskSetTracker::state() const {
    RiskSetState s;
    for (DyadIndex d = 0; d < start_space_.size(); ++d) {
        if (blocked_[d] == 0) s.at_start.push_back(d);
    }
    for (DyadIndex d = 0; d < end_space_.size(); ++d) {
        if (ongoing_event_[d] == kNone) continue;
        s.at_end.push_back(d);
        const auto it = std::find_if(ongoing_.begin(), ongoing_.end(),
                                     [&](const OngoingEvent& o) { return o.event == ongoing_event_[d]; });
        s.ongoing_since.push_back(it->t_start);
    }
    return s;
}

RiskSetState riskset_at(const TransitionSequence& seq, std::size_t m) {
    RiskSetTracker tracker(seq.n_actors, seq.dir);
    for (std::size_t k = 0; k < m && k < seq.size(); ++k) tracker.apply(seq[k]);
    return tracker.state();
}

std::vector<TimelineRow> riskset_timeline(const TransitionSequence& seq, std::optional<Time> observation_end) {
    std::vector<TimelineRow> rows;
    RiskSetTracker tracker(seq.n_actors, seq.dir);
    for (std::size_t m = 0; m < seq.size(); ++m) {
        if (m == 0 || seq[m].time != seq[m - 1].time) rows.push_back({seq[m].time, tracker.state(), false});
        tracker.apply(seq[m]);
    }
    const Time last = seq.size() ? seq.transitions.back().time : seq.origin;
    rows.push_back({observation_end.value_or(last), tracker.state(), true});
    return rows;
}

}  // namespace durem
