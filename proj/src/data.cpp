#include "durem/data.hpp"

#include "durem/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace durem {

ActorIndex ActorRegistry::intern(const std::string& label) {
    if (auto it = index_.find(label); it != index_.end()) return it->second;
    const auto index = static_cast<ActorIndex>(labels_.size());
    labels_.push_back(label);
    index_.emplace(label, index);
    return index;
}

std::optional<ActorIndex> ActorRegistry::find(const std::string& label) const {
    if (auto it = index_.find(label); it != index_.end()) return it->second;
    return std::nullopt;
}

void sort_events(std::vector<DurationEvent>& events) {
    std::stable_sort(events.begin(), events.end(), [](const DurationEvent& a, const DurationEvent& b) {
        if (a.t_start != b.t_start) return a.t_start < b.t_start;
        return a.row < b.row;
    });
}

std::vector<TransitionKey> ordered_transitions(const std::vector<DurationEvent>& events) {
    struct Keyed {
        Time time;
        int klass;  // 0: end of an earlier-started event, 1: start or zero-duration end
        std::size_t row;
        int kind;  // start before end within one zero-duration event
        TransitionKey key;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(2 * events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
        const auto& ev = events[e];
        keyed.push_back({ev.t_start, 1, ev.row, 0, {e, false}});
        const bool instantaneous = !(ev.t_start < ev.t_end);
        keyed.push_back({ev.t_end, instantaneous ? 1 : 0, ev.row, 1, {e, true}});
    }
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.klass != b.klass) return a.klass < b.klass;
        if (a.row != b.row) return a.row < b.row;
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.key.event < b.key.event;
    });
    std::vector<TransitionKey> out;
    out.reserve(keyed.size());
    for (const auto& k : keyed) out.push_back(k.key);
    return out;
}

namespace {

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

EventHistory parse_event_history(std::istream& in, const ColumnMap& columns, ValidationReport* warnings) {
    std::string line;
    if (!text::next_line(in, line)) throw DataError("event file is empty (no header row)");
    const auto header = text::split_record(line, columns.delimiter);
    const auto c_sender = column_index(header, columns.sender);
    const auto c_receiver = column_index(header, columns.receiver);
    const auto c_start = column_index(header, columns.t_start);
    const auto c_end = column_index(header, columns.t_end);
    std::optional<std::size_t> c_group;
    if (columns.group) c_group = column_index(header, *columns.group);

    EventHistory history;
    ValidationReport report;
    std::size_t row = 0;
    for (; text::next_line(in, line); ++row) {
        const auto fields = text::split_record(line, columns.delimiter);
        if (fields.size() != header.size()) {
            report.errors.push_back({row, "expected " + std::to_string(header.size()) + " fields, found " +
                                              std::to_string(fields.size())});
            continue;
        }
        const auto t_start = text::parse_double(fields[c_start]);
        const auto t_end = text::parse_double(fields[c_end]);
        if (!t_start || !t_end) {
            report.errors.push_back({row, "unparseable time value"});
            continue;
        }
        if (*t_end < *t_start) {
            report.errors.push_back({row, "t_end < t_start"});
            continue;
        }
        if (*t_end == *t_start) report.warnings.push_back({row, "zero duration"});
        DurationEvent ev;
        ev.sender = history.actors.intern(fields[c_sender]);
        ev.receiver = history.actors.intern(fields[c_receiver]);
        ev.t_start = *t_start;
        ev.t_end = *t_end;
        if (c_group) ev.group = fields[*c_group];
        ev.row = row;
        history.events.push_back(std::move(ev));
    }
    if (!report.errors.empty()) {
        throw DataError("event file has " + std::to_string(report.errors.size()) + " invalid row(s)", report);
    }
    sort_events(history.events);
    if (warnings) *warnings = std::move(report);
    return history;
}

EventHistory parse_event_history(const std::filesystem::path& path, const ColumnMap& columns,
                                 ValidationReport* warnings) {
    auto in = open_input(path);
    return parse_event_history(in, columns, warnings);
}

void write_event_history(const EventHistory& history, std::ostream& out) {
    const bool grouped = std::any_of(history.events.begin(), history.events.end(),
                                     [](const DurationEvent& e) { return e.group.has_value(); });
    out << "sender,receiver,t_start,t_end" << (grouped ? ",group" : "") << '\n';
    for (const auto& e : history.events) {
        out << history.actors.label(e.sender) << ',' << history.actors.label(e.receiver) << ','
            << text::format_double(e.t_start) << ',' << text::format_double(e.t_end);
        if (grouped) out << ',' << e.group.value_or("");
        out << '\n';
    }
}

void write_event_history(const EventHistory& history, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_event_history(history, out);
}

ValidationReport validate_history(const EventHistory& history, Directionality dir) {
    ValidationReport report;
    const auto& events = history.events;
    const bool unordered = dir.coarse() == Mode::undirected;
    auto coarse_pair = [&](const DurationEvent& e) {
        auto p = std::make_pair(e.sender, e.receiver);
        if (unordered && p.first > p.second) std::swap(p.first, p.second);
        return p;
    };

    std::vector<char> usable(events.size(), 1);
    for (std::size_t k = 0; k < events.size(); ++k) {
        const auto& e = events[k];
        if (!std::isfinite(e.t_start) || !std::isfinite(e.t_end)) {
            report.errors.push_back({k, "non-finite time"});
            usable[k] = 0;
            continue;
        }
        if (e.sender == e.receiver) {
            report.errors.push_back({k, "self-loop"});
            usable[k] = 0;
        }
        if (e.t_end < e.t_start) {
            report.errors.push_back({k, "negative duration"});
            usable[k] = 0;
        }
        if (e.t_start < 0.0) {
            report.errors.push_back({k, "ongoing at time 0 (starts before the observation window)"});
            usable[k] = 0;
        }
        if (e.sender >= history.n_actors() || e.receiver >= history.n_actors()) {
            report.errors.push_back({k, "unknown actor"});
            usable[k] = 0;
        }
        if (usable[k] && e.t_end == e.t_start) report.warnings.push_back({k, "zero duration"});
    }

    using Key = std::tuple<ActorIndex, ActorIndex, Time, Time>;
    std::map<Key, std::size_t> seen;
    for (std::size_t k = 0; k < events.size(); ++k) {
        if (!usable[k]) continue;
        const auto [a, b] = coarse_pair(events[k]);
        const auto [it, inserted] = seen.emplace(Key{a, b, events[k].t_start, events[k].t_end}, k);
        if (!inserted) {
            report.errors.push_back({k, "duplicate of event " + std::to_string(it->second)});
            usable[k] = 0;
        }
    }

    std::vector<DurationEvent> kept;
    std::vector<std::size_t> kept_index;
    for (std::size_t k = 0; k < events.size(); ++k) {
        if (usable[k]) {
            kept.push_back(events[k]);
            kept_index.push_back(k);
        }
    }
    std::map<std::pair<ActorIndex, ActorIndex>, std::size_t> open;
    for (const auto& key : ordered_transitions(kept)) {
        const auto pair = coarse_pair(kept[key.event]);
        const auto original = kept_index[key.event];
        if (!key.is_end) {
            if (auto it = open.find(pair); it != open.end()) {
                report.errors.push_back(
                    {original, "overlaps ongoing event " + std::to_string(it->second) + " on the same dyad"});
                continue;
            }
            open.emplace(pair, original);
        } else if (auto it = open.find(pair); it != open.end() && it->second == original) {
            open.erase(it);
        }
    }

    auto warn_ties = [&](auto time_of, const char* what) {
        std::vector<std::size_t> order;
        for (std::size_t k = 0; k < events.size(); ++k)
            if (usable[k]) order.push_back(k);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return time_of(events[a]) < time_of(events[b]); });
        for (std::size_t n = 1; n < order.size(); ++n) {
            if (time_of(events[order[n]]) == time_of(events[order[n - 1]])) {
                report.warnings.push_back({order[n], what});
            }
        }
    };
    warn_ties([](const DurationEvent& e) { return e.t_start; }, "simultaneous transitions (shared start time)");
    warn_ties([](const DurationEvent& e) { return e.t_end; }, "simultaneous transitions (shared end time)");

    auto by_index = [](const Finding& a, const Finding& b) { return a.event_index < b.event_index; };
    std::stable_sort(report.errors.begin(), report.errors.end(), by_index);
    std::stable_sort(report.warnings.begin(), report.warnings.end(), by_index);
    return report;
}

EventHistory collapse_gaps(const EventHistory& history) {
    EventHistory out = history;
    sort_events(out.events);
    if (out.events.empty()) return out;

    std::vector<std::string> order;
    std::map<std::string, std::size_t> position;
    for (const auto& e : out.events) {
        const auto label = e.group.value_or("");
        if (position.emplace(label, order.size()).second) order.push_back(label);
    }
    std::vector<Time> first_start(order.size(), 0.0);
    std::vector<Time> last_end(order.size(), 0.0);
    std::vector<char> initialised(order.size(), 0);
    for (const auto& e : out.events) {
        const auto g = position[e.group.value_or("")];
        if (!initialised[g]) {
            first_start[g] = e.t_start;
            last_end[g] = e.t_end;
            initialised[g] = 1;
        }
        last_end[g] = std::max(last_end[g], e.t_end);
    }
    std::vector<Time> offset(order.size(), 0.0);
    for (std::size_t g = 1; g < order.size(); ++g) {
        if (first_start[g] < last_end[g - 1]) {
            throw DataError("group '" + order[g] + "' starts before group '" + order[g - 1] + "' ends");
        }
        offset[g] = offset[g - 1] + (first_start[g] - last_end[g - 1]);
    }
    for (auto& e : out.events) {
        const auto g = position[e.group.value_or("")];
        if (offset[g] == 0.0) continue;
        e.t_start -= offset[g];
        e.t_end -= offset[g];
    }
    if (out.observation_end) *out.observation_end -= offset.back();
    return out;
}

double default_duration_floor(const EventHistory& history) {
    double smallest = 0.0;
    for (const auto& e : history.events) {
        const double d = e.duration();
        if (d > 0.0 && (smallest == 0.0 || d < smallest)) smallest = d;
    }
    return smallest > 0.0 ? smallest * 1e-3 : 1e-3;
}

const AttributeValue& CovariateSet::attribute(const std::string& name, ActorIndex actor) const {
    const auto it = attributes.find(name);
    if (it == attributes.end()) throw ConfigError("unknown actor attribute '" + name + "'");
    const auto& value = it->second.at(actor);
    if (value.text.empty() && !value.number) {
        throw DataError("actor " + std::to_string(actor) + " has no value for attribute '" + name + "'");
    }
    return value;
}

double CovariateSet::numeric_attribute(const std::string& name, ActorIndex actor) const {
    const auto& value = attribute(name, actor);
    if (!value.number) throw DataError("attribute '" + name + "' is not numeric ('" + value.text + "')");
    return *value.number;
}

double CovariateSet::tie(const std::string& name, ActorIndex i, ActorIndex j, Mode mode) const {
    const auto it = ties.find(name);
    if (it == ties.end()) throw ConfigError("unknown dyadic tie '" + name + "'");
    const auto& present = tie_present.at(name);
    const std::size_t ij = static_cast<std::size_t>(i) * n_actors + j;
    if (mode == Mode::undirected && !present[ij]) return it->second[static_cast<std::size_t>(j) * n_actors + i];
    return it->second[ij];
}

void CovariateSet::resize(std::size_t n) {
    for (auto& [name, values] : attributes) values.resize(n);
    for (auto& [name, matrix] : ties) {
        std::vector<double> grown(n * n, 0.0);
        std::vector<char> grown_present(n * n, 0);
        auto& present = tie_present[name];
        for (std::size_t i = 0; i < n_actors; ++i) {
            for (std::size_t j = 0; j < n_actors; ++j) {
                grown[i * n + j] = matrix[i * n_actors + j];
                grown_present[i * n + j] = present[i * n_actors + j];
            }
        }
        matrix = std::move(grown);
        present = std::move(grown_present);
    }
    n_actors = n;
}

void parse_actor_attributes(std::istream& in, ActorRegistry& actors, CovariateSet& covariates, char delimiter) {
    std::string line;
    if (!text::next_line(in, line)) throw DataError("actor attribute file is empty");
    const auto header = text::split_record(line, delimiter);
    if (header.size() < 2) throw DataError("actor attribute file needs an actor column and at least one attribute");

    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
    std::set<std::string> seen;
    ValidationReport report;
    for (std::size_t row = 0; text::next_line(in, line); ++row) {
        auto fields = text::split_record(line, delimiter);
        if (fields.size() != header.size()) {
            report.errors.push_back({row, "wrong field count"});
            continue;
        }
        if (!seen.insert(fields[0]).second) {
            report.errors.push_back({row, "duplicate actor '" + fields[0] + "'"});
            continue;
        }
        rows.emplace_back(fields[0], std::vector<std::string>(fields.begin() + 1, fields.end()));
    }
    if (!report.ok()) throw DataError("invalid actor attribute file", report);

    for (const auto& [label, values] : rows) actors.intern(label);
    covariates.resize(actors.size());
    for (std::size_t c = 1; c < header.size(); ++c) {
        auto& column = covariates.attributes[header[c]];
        column.assign(actors.size(), AttributeValue{});
    }
    for (const auto& [label, values] : rows) {
        const auto actor = *actors.find(label);
        for (std::size_t c = 1; c < header.size(); ++c) {
            AttributeValue value{values[c - 1], text::parse_double(values[c - 1])};
            covariates.attributes[header[c]][actor] = std::move(value);
        }
    }
    for (std::size_t a = 0; a < actors.size(); ++a) {
        if (!seen.contains(actors.label(static_cast<ActorIndex>(a)))) {
            throw DataError("actor '" + actors.label(static_cast<ActorIndex>(a)) +
                            "' is missing from the actor attribute file");
        }
    }
}

void parse_actor_attributes(const std::filesystem::path& path, ActorRegistry& actors, CovariateSet& covariates,
                            char delimiter) {
    auto in = open_input(path);
    parse_actor_attributes(in, actors, covariates, delimiter);
}

void parse_dyadic_ties(std::istream& in, const ActorRegistry& actors, CovariateSet& covariates, char delimiter) {
    std::string line;
    if (!text::next_line(in, line)) throw DataError("tie file is empty");
    const auto header = text::split_record(line, delimiter);
    if (header.size() < 3) throw DataError("tie file needs actor_a, actor_b and at least one tie column");
    covariates.resize(actors.size());
    const std::size_t n = actors.size();
    for (std::size_t c = 2; c < header.size(); ++c) {
        covariates.ties[header[c]].assign(n * n, 0.0);
        covariates.tie_present[header[c]].assign(n * n, 0);
    }
    ValidationReport report;
    for (std::size_t row = 0; text::next_line(in, line); ++row) {
        const auto fields = text::split_record(line, delimiter);
        if (fields.size() != header.size()) {
            report.errors.push_back({row, "wrong field count"});
            continue;
        }
        const auto a = actors.find(fields[0]);
        const auto b = actors.find(fields[1]);
        if (!a || !b) {
            report.errors.push_back({row, "unknown actor"});
            continue;
        }
        if (*a == *b) {
            report.errors.push_back({row, "self-tie"});
            continue;
        }
        const std::size_t ij = static_cast<std::size_t>(*a) * n + *b;
        for (std::size_t c = 2; c < header.size(); ++c) {
            const auto value = text::parse_double(fields[c]);
            if (!value) {
                report.errors.push_back({row, "non-numeric tie value in column '" + header[c] + "'"});
                break;
            }
            auto& present = covariates.tie_present[header[c]];
            if (present[ij]) {
                report.errors.push_back({row, "duplicate dyad"});
                break;
            }
            covariates.ties[header[c]][ij] = *value;
            present[ij] = 1;
        }
    }
    if (!report.ok()) throw DataError("invalid tie file", report);
}

void parse_dyadic_ties(const std::filesystem::path& path, const ActorRegistry& actors, CovariateSet& covariates,
                       char delimiter) {
    auto in = open_input(path);
    parse_dyadic_ties(in, actors, covariates, delimiter);
}

void write_actor_attributes(const ActorRegistry& actors, const CovariateSet& covariates, std::ostream& out) {
    out << "actor";
    for (const auto& [name, values] : covariates.attributes) out << ',' << name;
    out << '\n';
    for (std::size_t a = 0; a < actors.size(); ++a) {
        out << actors.label(static_cast<ActorIndex>(a));
        for (const auto& [name, values] : covariates.attributes) {
            const auto& v = values.at(a);
            out << ',' << (v.number ? text::format_double(*v.number) : v.text);
        }
        out << '\n';
    }
}

}  // namespace durem
