#include "durem/config.hpp"

#include "durem/text.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace durem {

namespace pt = boost::property_tree;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double parse_real(const std::string& text, const std::string& key) {
    const auto v = text::parse_double(text);
    if (!v) throw ConfigError(fmt::format("{}: '{}' is not a number", key, text));
    return *v;
}

std::size_t parse_count(const std::string& text, const std::string& key) {
    const double v = parse_real(text, key);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
        throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, text));
    }
    return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& text, const std::string& key) {
    const auto v = lower(text::trim(text));
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, text));
}

std::optional<double> parse_optional_real(const std::string& text, const std::string& key) {
    const auto v = lower(text::trim(text));
    if (v == "none" || v.empty()) return std::nullopt;
    return parse_real(v, key);
}

// Section -> allowed keys.
const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"model",
         {"directionality", "start", "end", "start_standardize", "end_standardize", "pshift_reference",
          "recency_empty", "engaged_actor", "t0", "censor_tail", "observation_end"}},
        {"weights", {"psi_s", "psi_e", "tau", "duration_floor"}},
        {"grid", {"psi_s", "psi_e", "tau", "refine_step"}},
        {"optimizer", {"tol", "rel_tol", "max_iter", "max_halvings"}},
        {"data", {"sender", "receiver", "t_start", "t_end", "group", "delimiter", "collapse_gaps"}},
        {"simulate",
         {"actors", "events", "horizon", "start_coef", "end_coef", "attribute", "replications", "seed"}},
    };
    return s;
}

std::vector<StatisticSpec> parse_stats(const std::string& list, const std::string& standardize, Side side) {
    std::vector<StatisticSpec> out;
    for (const auto& item : text::split_list(list)) {
        if (lower(item) == "baseline") continue;  // always present
        out.push_back(parse_statistic(item, side));
    }
    const auto flagged = text::split_list(standardize);
    for (const auto& f : flagged) {
        if (lower(f) == "all") {
            for (auto& s : out) s.standardize = true;
            continue;
        }
        const auto label = parse_statistic(f, side).label();
        const auto it = std::find_if(out.begin(), out.end(), [&](const StatisticSpec& s) { return s.label() == label; });
        if (it == out.end()) {
            throw ConfigError(fmt::format("{}_standardize names '{}', which is not in the {} model", to_string(side), f,
                                          to_string(side)));
        }
        it->standardize = true;
    }
    return out;
}

}  // namespace

std::vector<double> parse_real_list(const std::string& textual) {
    const auto t = text::trim(textual);
    if (t.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::size_t pos = 0;
        while (true) {
            const auto next = t.find(':', pos);
            parts.push_back(text::trim(t.substr(pos, next - pos)));
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (parts.size() != 3) throw ConfigError(fmt::format("range '{}' must be from:to:step", t));
        const double from = parse_real(parts[0], "range");
        const double to = parse_real(parts[1], "range");
        const double step = parse_real(parts[2], "range");
        if (!(step > 0.0) || to < from) throw ConfigError(fmt::format("range '{}' is empty or has a non-positive step", t));
        const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
        std::vector<double> out;
        for (long k = 0; k <= n; ++k) out.push_back(from + static_cast<double>(k) * step);
        return out;
    }
    std::vector<double> out;
    for (const auto& item : text::split_list(t)) out.push_back(parse_real(item, "list"));
    return out;
}

std::vector<std::optional<double>> parse_tau_list(const std::string& textual) {
    std::vector<std::optional<double>> out;
    for (const auto& item : text::split_list(textual)) {
        if (lower(item) == "none") {
            out.emplace_back(std::nullopt);
        } else {
            for (double v : parse_real_list(item)) out.emplace_back(v);
        }
    }
    return out;
}

double RunConfig::duration_floor(const EventHistory& history) const {
    return floor_auto ? default_duration_floor(history) : weights.duration_floor;
}

SimConfig RunConfig::sim_config() const {
    if (!simulate.present) throw ConfigError("the configuration has no [simulate] section");
    SimConfig cfg;
    cfg.actors = simulate.actors;
    cfg.spec = spec;
    cfg.coef.start = simulate.start_coef;
    cfg.coef.end = simulate.end_coef;
    cfg.weights = weights;
    if (floor_auto) cfg.weights.duration_floor = 1e-6;
    cfg.events = simulate.events;
    cfg.horizon = simulate.horizon;
    cfg.seed = seed.value_or(0);
    if (simulate.cyclic_attribute) {
        cfg.covariates.resize(cfg.actors);
        add_cyclic_attribute(cfg.covariates, simulate.cyclic_attribute->first, simulate.cyclic_attribute->second);
    }
    return cfg;
}

RunConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("configuration line {}: {}", e.line(), e.message()));
    }
    for (const auto& [section, body] : tree) {
        const auto it = schema().find(section);
        if (it == schema().end()) throw ConfigError(fmt::format("unknown configuration section [{}]", section));
        for (const auto& [key, value] : body) {
            if (!it->second.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in [{}]", key, section));
        }
    }
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return text::trim(*v);
        return std::nullopt;
    };

    RunConfig cfg;
    auto& spec = cfg.spec;
    if (auto v = get("model.directionality")) spec.dir = parse_directionality(*v);
    spec.start_stats = parse_stats(get("model.start").value_or(""), get("model.start_standardize").value_or(""),
                                   Side::start);
    spec.end_stats = parse_stats(get("model.end").value_or(""), get("model.end_standardize").value_or(""), Side::end);
    if (auto v = get("model.pshift_reference")) {
        const auto s = lower(*v);
        if (s == "starts_only") spec.options.pshift_reference = PShiftReference::starts_only;
        else if (s == "any_transition") spec.options.pshift_reference = PShiftReference::any_transition;
        else throw ConfigError("pshift_reference must be starts_only or any_transition");
    }
    if (auto v = get("model.recency_empty")) {
        const auto s = lower(*v);
        if (s == "zero") spec.options.recency_empty = RecencyEmpty::zero;
        else if (s == "reciprocal") spec.options.recency_empty = RecencyEmpty::reciprocal;
        else throw ConfigError("recency_empty must be zero or reciprocal");
    }
    if (auto v = get("model.engaged_actor")) {
        const auto s = lower(*v);
        if (s == "count") spec.options.engaged = EngagedMode::count;
        else if (s == "binary") spec.options.engaged = EngagedMode::binary;
        else throw ConfigError("engaged_actor must be count or binary");
    }
    if (auto v = get("model.t0")) {
        const auto s = lower(*v);
        if (s == "first_event") spec.origin = TimeOrigin::first_event;
        else if (s == "zero") spec.origin = TimeOrigin::zero;
        else throw ConfigError("t0 must be first_event or zero");
    }
    if (auto v = get("model.censor_tail")) spec.censor_tail = parse_bool(*v, "censor_tail");
    if (auto v = get("model.observation_end")) cfg.observation_end = parse_real(*v, "observation_end");
    spec.check();

    if (auto v = get("weights.psi_s")) cfg.weights.psi_s = parse_real(*v, "psi_s");
    if (auto v = get("weights.psi_e")) cfg.weights.psi_e = parse_real(*v, "psi_e");
    if (auto v = get("weights.tau")) cfg.weights.tau = parse_optional_real(*v, "tau");
    if (auto v = get("weights.duration_floor"); v && lower(*v) != "auto") {
        cfg.floor_auto = false;
        cfg.weights.duration_floor = parse_real(*v, "duration_floor");
    }
    cfg.weights.check();

    cfg.grid.psi_s = {cfg.weights.psi_s};
    cfg.grid.psi_e = {cfg.weights.psi_e};
    cfg.grid.tau = {cfg.weights.tau};
    if (tree.get_child_optional("grid")) {
        cfg.grid_given = true;
        if (auto v = get("grid.psi_s")) cfg.grid.psi_s = parse_real_list(*v);
        if (auto v = get("grid.psi_e")) cfg.grid.psi_e = parse_real_list(*v);
        if (auto v = get("grid.tau")) cfg.grid.tau = parse_tau_list(*v);
        if (auto v = get("grid.refine_step")) cfg.grid.refine_step = parse_optional_real(*v, "refine_step");
    }
    cfg.grid.check();

    if (auto v = get("optimizer.tol")) cfg.optimizer.tol = parse_real(*v, "tol");
    if (auto v = get("optimizer.rel_tol")) cfg.optimizer.rel_tol = parse_real(*v, "rel_tol");
    if (auto v = get("optimizer.max_iter")) cfg.optimizer.max_iter = static_cast<int>(parse_count(*v, "max_iter"));
    if (auto v = get("optimizer.max_halvings")) {
        cfg.optimizer.max_halvings = static_cast<int>(parse_count(*v, "max_halvings"));
    }
    if (!(cfg.optimizer.tol > 0.0) || !(cfg.optimizer.rel_tol >= 0.0) || cfg.optimizer.max_iter < 1) {
        throw ConfigError("optimizer tolerances must be positive and max_iter at least 1");
    }

    if (auto v = get("data.sender")) cfg.columns.sender = *v;
    if (auto v = get("data.receiver")) cfg.columns.receiver = *v;
    if (auto v = get("data.t_start")) cfg.columns.t_start = *v;
    if (auto v = get("data.t_end")) cfg.columns.t_end = *v;
    if (auto v = get("data.group"); v && !v->empty()) cfg.columns.group = *v;
    if (auto v = get("data.delimiter")) {
        const std::string d = *v == "tab" || *v == "\\t" ? "\t" : *v;
        if (d.size() != 1) throw ConfigError("delimiter must be a single character (or 'tab')");
        cfg.columns.delimiter = d[0];
    }
    if (auto v = get("data.collapse_gaps")) cfg.collapse_gaps = parse_bool(*v, "collapse_gaps");
    if (cfg.collapse_gaps && !cfg.columns.group) throw ConfigError("collapse_gaps needs a [data] group column");

    if (auto v = get("simulate.seed")) cfg.seed = static_cast<std::uint64_t>(parse_count(*v, "seed"));
    if (tree.get_child_optional("simulate")) {
        auto& sim = cfg.simulate;
        sim.present = true;
        if (auto v = get("simulate.actors")) sim.actors = parse_count(*v, "actors");
        if (auto v = get("simulate.events")) sim.events = parse_count(*v, "events");
        if (auto v = get("simulate.horizon")) sim.horizon = parse_real(*v, "horizon");
        if (auto v = get("simulate.start_coef")) sim.start_coef = parse_real_list(*v);
        if (auto v = get("simulate.end_coef")) sim.end_coef = parse_real_list(*v);
        if (auto v = get("simulate.replications")) sim.replications = parse_count(*v, "replications");
        if (auto v = get("simulate.attribute")) {
            const auto colon = v->find(':');
            if (colon == std::string::npos) throw ConfigError("attribute must be name:levels");
            sim.cyclic_attribute = std::make_pair(text::trim(v->substr(0, colon)),
                                                  parse_count(v->substr(colon + 1), "attribute levels"));
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read configuration file '{}'", path.string()));
    return parse_config(in);
}

}  // namespace durem
