#pragma once

#include "durem/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace durem {

// Bijection between actor labels and dense indices 0..A-1, assigned in order
// of first registration.
class ActorRegistry {
public:
    ActorIndex intern(const std::string& label);
    [[nodiscard]] std::optional<ActorIndex> find(const std::string& label) const;
    [[nodiscard]] const std::string& label(ActorIndex index) const { return labels_.at(index); }
    [[nodiscard]] std::size_t size() const { return labels_.size(); }
    [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, ActorIndex> index_;
};

struct DurationEvent {
    ActorIndex sender{0};
    ActorIndex receiver{0};
    Time t_start{0.0};
    Time t_end{0.0};
    std::optional<std::string> group;
    // Position in the input file; tiebreak for equal start times.
    std::size_t row{0};

    [[nodiscard]] Time duration() const { return t_end - t_start; }
};

struct EventHistory {
    std::vector<DurationEvent> events;
    ActorRegistry actors;
    std::optional<Time> observation_end;

    [[nodiscard]] std::size_t size() const { return events.size(); }
    [[nodiscard]] std::size_t n_actors() const { return actors.size(); }
};

// Sorts events by (t_start, row), the canonical order of an EventHistory.
void sort_events(std::vector<DurationEvent>& events);

struct TransitionKey {
    std::size_t event{0};
    bool is_end{false};
};

// Canonical order of the 2M start/end transitions: by time; at equal times
// ends of earlier-started events come first, then starts in row order, with
// a zero-duration event's end placed directly after its own start.
std::vector<TransitionKey> ordered_transitions(const std::vector<DurationEvent>& events);

struct ColumnMap {
    std::string sender{"sender"};
    std::string receiver{"receiver"};
    std::string t_start{"t_start"};
    std::string t_end{"t_end"};
    std::optional<std::string> group;
    char delimiter{','};
};

struct Finding {
    std::size_t event_index{0};
    std::string rule;

    friend bool operator==(const Finding&, const Finding&) = default;
};

struct ValidationReport {
    std::vector<Finding> errors;
    std::vector<Finding> warnings;

    [[nodiscard]] bool ok() const { return errors.empty(); }
};

// Raised by the loaders. Row-level problems are collected in `report`
// before the load is aborted.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, ValidationReport report = {})
        : std::runtime_error(what), report_(std::move(report)) {}
    [[nodiscard]] const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

// Reads a delimited event file with a header row. Rows with an unparseable
// time or t_end < t_start are reported (row index = 0-based data row) and the
// load is aborted. Zero durations load with a warning in `warnings`.
EventHistory parse_event_history(const std::filesystem::path& path, const ColumnMap& columns,
                                 ValidationReport* warnings = nullptr);
EventHistory parse_event_history(std::istream& in, const ColumnMap& columns, ValidationReport* warnings = nullptr);

// Writes `sender,receiver,t_start,t_end[,group]` with round-trip precision.
void write_event_history(const EventHistory& history, std::ostream& out);
void write_event_history(const EventHistory& history, const std::filesystem::path& path);

// Checks the fit-eligibility rules: self-loops, negative durations, events
// starting before time 0, non-finite times, duplicate events and overlapping
// events on the same dyad (in the coarse representation of `dir`). Zero
// durations and shared start or end times are warnings.
ValidationReport validate_history(const EventHistory& history, Directionality dir);

// Removes the idle gap between consecutive groups (ordered by first start) so
// each group begins where the previous one ended. Within-group spacing and
// durations are unchanged.
EventHistory collapse_gaps(const EventHistory& history);

// Smallest positive duration times 1e-3; 1e-3 when no positive duration exists.
double default_duration_floor(const EventHistory& history);

struct AttributeValue {
    std::string text;
    std::optional<double> number;

    friend bool operator==(const AttributeValue& a, const AttributeValue& b) {
        if (a.number && b.number) return *a.number == *b.number;
        return a.text == b.text;
    }
};

// Actor attributes c_i and dyadic tie matrices w_tie.
struct CovariateSet {
    std::map<std::string, std::vector<AttributeValue>> attributes;
    // Row-major n x n matrices keyed by tie name; `tie_present` marks the
    // entries supplied by the file.
    std::map<std::string, std::vector<double>> ties;
    std::map<std::string, std::vector<char>> tie_present;
    std::size_t n_actors{0};

    [[nodiscard]] const AttributeValue& attribute(const std::string& name, ActorIndex actor) const;
    [[nodiscard]] double numeric_attribute(const std::string& name, ActorIndex actor) const;
    // Undirected lookups fall back to (j, i) when (i, j) was not supplied.
    [[nodiscard]] double tie(const std::string& name, ActorIndex i, ActorIndex j, Mode mode) const;
    [[nodiscard]] bool has_attribute(const std::string& name) const { return attributes.contains(name); }
    [[nodiscard]] bool has_tie(const std::string& name) const { return ties.contains(name); }

    // Grows every attribute/tie table to `n` actors (new entries stay empty).
    void resize(std::size_t n);
};

// `actor,<attr1>,...`. Unknown actors are added to the registry (isolates).
// Every actor in the registry must appear exactly once.
void parse_actor_attributes(const std::filesystem::path& path, ActorRegistry& actors, CovariateSet& covariates,
                            char delimiter = ',');
void parse_actor_attributes(std::istream& in, ActorRegistry& actors, CovariateSet& covariates, char delimiter = ',');

// Long format `actor_a,actor_b,<tie1>,...`; pairs not listed are 0.
void parse_dyadic_ties(const std::filesystem::path& path, const ActorRegistry& actors, CovariateSet& covariates,
                       char delimiter = ',');
void parse_dyadic_ties(std::istream& in, const ActorRegistry& actors, CovariateSet& covariates, char delimiter = ',');

void write_actor_attributes(const ActorRegistry& actors, const CovariateSet& covariates, std::ostream& out);

}  // namespace durem
