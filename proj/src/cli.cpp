#include "durem/cli.hpp"

#include "durem/config.hpp"
#include "durem/text.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <sstream>

namespace durem::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot read '{}'", path.string()));
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    std::string hex;
    for (unsigned int k = 0; k < length; ++k) hex += fmt::format("{:02x}", digest[k]);
    return hex;
}

namespace {

struct Options {
    std::string events;
    std::string actors;
    std::string ties;
    std::string config;
    std::string out;
    std::string fit_dir;
    int workers{1};
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replications;
};

struct Inputs {
    RunConfig cfg;
    EventHistory history;
    CovariateSet covariates;
    ValidationReport report;
};

class Manifest {
public:
    Manifest(std::string command, const std::vector<std::string>& args)
        : started_(std::chrono::system_clock::now()), clock_(std::chrono::steady_clock::now()) {
        doc_["command"] = std::move(command);
        doc_["tool_version"] = tool_version;
        doc_["argv"] = args;
    }
    void config(const std::string& path) {
        if (path.empty()) {
            doc_["config_sha256"] = nullptr;
            return;
        }
        doc_["config"] = path;
        doc_["config_sha256"] = sha256_file(path);
    }
    void input(const std::string& role, const std::string& path) {
        if (path.empty()) return;
        doc_["inputs"][role] = {{"path", path}, {"sha256", sha256_file(path)}};
    }
    json& operator[](const std::string& key) { return doc_[key]; }

    void write(const fs::path& dir) {
        const std::time_t t = std::chrono::system_clock::to_time_t(started_);
        std::tm utc{};
        gmtime_r(&t, &utc);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
        doc_["timing"] = {{"started_utc", stamp},
                          {"elapsed_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count()}};
        std::ofstream f(dir / "manifest.json");
        f << doc_.dump(2) << '\n';
    }

private:
    json doc_;
    std::chrono::system_clock::time_point started_;
    std::chrono::steady_clock::time_point clock_;
};

fs::path prepare_out(const std::string& out) {
    if (out.empty()) throw ConfigError("--out DIR is required");
    fs::create_directories(out);
    return out;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    return f;
}

RunConfig read_config(const Options& o) { return o.config.empty() ? RunConfig{} : load_config(o.config); }

void print_report(const ValidationReport& report, std::ostream& out) {
    for (const auto& f : report.errors) out << "error: row " << f.event_index << ": " << f.rule << '\n';
    for (const auto& f : report.warnings) out << "warning: row " << f.event_index << ": " << f.rule << '\n';
}

// Loads events and covariates and checks them; DataError when invalid.
Inputs load_inputs(const Options& o, std::ostream& log) {
    Inputs in;
    in.cfg = read_config(o);
    if (o.events.empty()) throw ConfigError("--events PATH is required");
    in.history = parse_event_history(o.events, in.cfg.columns, &in.report);
    if (in.cfg.observation_end) in.history.observation_end = in.cfg.observation_end;
    if (!o.actors.empty()) parse_actor_attributes(o.actors, in.history.actors, in.covariates, in.cfg.columns.delimiter);
    in.covariates.resize(in.history.n_actors());
    if (!o.ties.empty()) parse_dyadic_ties(o.ties, in.history.actors, in.covariates, in.cfg.columns.delimiter);
    in.cfg.spec.check(&in.covariates);

    auto checked = validate_history(in.history, in.cfg.spec.dir);
    in.report.errors.insert(in.report.errors.end(), checked.errors.begin(), checked.errors.end());
    for (const auto& w : checked.warnings) {
        if (std::find(in.report.warnings.begin(), in.report.warnings.end(), w) == in.report.warnings.end()) {
            in.report.warnings.push_back(w);
        }
    }
    if (!in.report.ok()) {
        print_report(in.report, log);
        throw DataError(fmt::format("{} validation error(s) in '{}'", in.report.errors.size(), o.events), in.report);
    }
    if (in.history.observation_end) {
        for (const auto& e : in.history.events) {
            if (e.t_end > *in.history.observation_end) {
                throw ConfigError("observation_end lies before the last event end");
            }
        }
    }
    if (in.cfg.collapse_gaps) in.history = collapse_gaps(in.history);
    return in;
}

std::string dyad_label(const EventHistory& h, Mode mode, ActorIndex i, ActorIndex j) {
    return h.actors.label(i) + (mode == Mode::directed ? "->" : "--") + h.actors.label(j);
}

std::string dyad_set(const EventHistory& h, const DyadSpace& space, const std::vector<DyadIndex>& dyads) {
    std::vector<std::string> names;
    for (auto d : dyads) {
        const auto [i, j] = space.actors(d);
        names.push_back(dyad_label(h, space.mode(), i, j));
    }
    return "{" + fmt::format("{}", fmt::join(names, ", ")) + "}";
}

int cmd_validate(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
    Manifest manifest("validate", args);
    std::ostringstream report;
    RunConfig cfg = read_config(o);
    if (o.events.empty()) throw ConfigError("--events PATH is required");
    ValidationReport r;
    EventHistory h;
    try {
        h = parse_event_history(o.events, cfg.columns, &r);
    } catch (const DataError& e) {
        print_report(e.report(), report);
        report << e.what() << '\n';
        out << report.str();
        if (!o.out.empty()) {
            const auto dir = prepare_out(o.out);
            auto f = open_out(dir / "validation.txt");
            f << report.str();
            manifest.config(o.config);
            manifest["status"] = "invalid";
            manifest.write(dir);
        }
        return exit_data;
    }
    if (cfg.observation_end) h.observation_end = cfg.observation_end;
    const auto checked = validate_history(h, cfg.spec.dir);
    r.errors.insert(r.errors.end(), checked.errors.begin(), checked.errors.end());
    for (const auto& w : checked.warnings) {
        if (std::find(r.warnings.begin(), r.warnings.end(), w) == r.warnings.end()) r.warnings.push_back(w);
    }
    print_report(r, report);
    report << fmt::format("{} events, {} actors, {} errors, {} warnings\n", h.size(), h.n_actors(), r.errors.size(),
                          r.warnings.size());

    const DyadSpace coarse(h.n_actors(), cfg.spec.dir.coarse());
    if (r.ok() && coarse.size() <= 12 && h.size() > 0) {
        const auto seq = build_transitions(h, cfg.spec.dir, cfg.spec.origin);
        const DyadSpace start_space(h.n_actors(), cfg.spec.dir.start);
        const DyadSpace end_space(h.n_actors(), cfg.spec.dir.end);
        report << "time,at_risk_to_start,at_risk_to_end\n";
        for (const auto& row : riskset_timeline(seq, h.observation_end)) {
            report << text::format_double(row.time) << ",\"" << dyad_set(h, start_space, row.state.at_start) << "\",\""
                   << dyad_set(h, end_space, row.state.at_end) << "\"\n";
        }
    }
    out << report.str();
    if (!o.out.empty()) {
        const auto dir = prepare_out(o.out);
        auto f = open_out(dir / "validation.txt");
        f << report.str();
        manifest.config(o.config);
        manifest.input("events", o.events);
        manifest["status"] = r.ok() ? "valid" : "invalid";
        manifest.write(dir);
    }
    return r.ok() ? exit_ok : exit_data;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fit_document(const FitResult& fit) {
    json doc;
    doc["psi_s"] = fit.psi_s;
    doc["psi_e"] = fit.psi_e;
    doc["tau"] = fit.tau ? json(*fit.tau) : json(nullptr);
    doc["loglik"] = number(fit.loglik);
    doc["duration_floor"] = fit.duration_floor;
    doc["n_events"] = fit.n_events;
    doc["n_transitions"] = fit.n_transitions;
    doc["convergence"] = {{"status", std::string(to_string(fit.convergence.status))},
                          {"iterations", fit.convergence.iterations},
                          {"gradient_norm", number(fit.convergence.gradient_norm)}};
    const auto beta = fit.coef.stacked();
    json params = json::array();
    for (std::size_t k = 0; k < fit.parameters.size(); ++k) {
        json p;
        p["parameter"] = fit.parameters[k];
        p["estimate"] = number(beta[static_cast<Eigen::Index>(k)]);
        if (fit.inference.available) {
            p["se"] = number(fit.inference.se[k]);
            p["z"] = number(fit.inference.z[k]);
            p["p"] = number(fit.inference.p[k]);
        } else {
            p["se"] = p["z"] = p["p"] = nullptr;
        }
        params.push_back(p);
    }
    doc["coefficients"] = params;
    doc["standard_errors"] = fit.inference.available ? "available" : fit.inference.diagnostic;
    std::size_t failed = 0;
    for (const auto& g : fit.profile) failed += g.ok ? 0 : 1;
    doc["grid_points"] = fit.profile.size();
    doc["grid_failures"] = failed;
    doc["coefficient_table"] = "coefficients.csv";
    doc["profile_table"] = "profile.csv";
    return doc;
}

int cmd_fit(const Options& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Manifest manifest("fit", args);
    const auto in = load_inputs(o, err);
    const auto dir = prepare_out(o.out);
    const double floor = in.cfg.duration_floor(in.history);
    const GridSearchInput input{in.history, in.covariates, in.cfg.spec, floor};
    const auto fit = grid_search(input, in.cfg.grid, o.workers, in.cfg.optimizer);

    {
        auto coefficients = open_out(dir / "coefficients.csv");
        coefficient_export(fit, coefficients);
        auto profile = open_out(dir / "profile.csv");
        profile_export(fit, profile);
        auto doc = open_out(dir / "fit.json");
        doc << fit_document(fit).dump(2) << '\n';
    }

    manifest.config(o.config);
    manifest.input("events", o.events);
    manifest.input("actors", o.actors);
    manifest.input("ties", o.ties);
    manifest["workers"] = o.workers;
    manifest["seed"] = nullptr;
    manifest["outputs"] = {"coefficients.csv", "profile.csv", "fit.json"};
    manifest.write(dir);

    out << fmt::format("selected psi_s={} psi_e={} tau={} loglik={}\n", text::format_double(fit.psi_s),
                       text::format_double(fit.psi_e), format_tau(fit.tau), text::format_double(fit.loglik));
    coefficient_export(fit, out);
    return exit_ok;
}

int cmd_stats(const Options& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Manifest manifest("stats", args);
    const auto in = load_inputs(o, err);
    const auto dir = prepare_out(o.out);
    WeightParams params = in.cfg.weights;
    params.duration_floor = in.cfg.duration_floor(in.history);
    const auto seq = build_transitions(in.history, in.cfg.spec.dir, in.cfg.spec.origin);
    const auto design = build_design(seq, in.cfg.spec, in.history, in.covariates, params);

    auto f = open_out(dir / "design.csv");
    f << "m,time,kind,dyad,in_riskset_side";
    for (const auto& c : design.start.columns) f << ",start:" << c;
    for (const auto& c : design.end.columns) f << ",end:" << c;
    f << ",observed\n";
    for (std::size_t m = 0; m < design.size(); ++m) {
        const auto& tr = design.transitions[m];
        const std::string kind = m < seq.size() ? (seq[m].kind == TransitionKind::start ? "start" : "end") : "censored";
        for (Side side : {Side::start, Side::end}) {
            const auto& block = design.block(side);
            const DyadSpace space(in.history.n_actors(), in.cfg.spec.dir.mode(side));
            for (std::size_t r = block.begin(m); r < block.end(m); ++r) {
                const auto [i, j] = space.actors(block.dyads[r]);
                f << m << ',' << text::format_double(tr.time) << ',' << kind << ','
                  << dyad_label(in.history, space.mode(), i, j) << ',' << to_string(side);
                const auto x = block.row(r);
                for (std::size_t k = 0; k < design.start.n_cols(); ++k) {
                    f << ',' << (side == Side::start ? text::format_double(x[k]) : "NA");
                }
                for (std::size_t k = 0; k < design.end.n_cols(); ++k) {
                    f << ',' << (side == Side::end ? text::format_double(x[k]) : "NA");
                }
                const bool observed = tr.observed_side == side && tr.observed_row == r;
                f << ',' << (observed ? 1 : 0) << '\n';
            }
        }
    }
    manifest.config(o.config);
    manifest.input("events", o.events);
    manifest.input("actors", o.actors);
    manifest.input("ties", o.ties);
    manifest["weights"] = {{"psi_s", params.psi_s},
                           {"psi_e", params.psi_e},
                           {"tau", params.tau ? json(*params.tau) : json(nullptr)},
                           {"duration_floor", params.duration_floor}};
    manifest["outputs"] = {"design.csv"};
    manifest.write(dir);
    out << fmt::format("{} transitions, {} start rows, {} end rows\n", design.size(), design.start.n_rows(),
                       design.end.n_rows());
    return exit_ok;
}

int cmd_profile(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
    Manifest manifest("profile", args);
    if (o.fit_dir.empty()) throw ConfigError("--fit DIR is required");
    const fs::path source = fs::path(o.fit_dir) / "profile.csv";
    std::ifstream in(source);
    if (!in) throw DataError(fmt::format("cannot read '{}'", source.string()));
    std::string line;
    if (!text::next_line(in, line)) throw DataError("profile table is empty");
    const auto header = text::split_record(line, ',');
    if (header.size() < 4 || header[0] != "psi_s" || header[3] != "loglik") {
        throw DataError(fmt::format("'{}' is not a profile table", source.string()));
    }
    std::vector<std::vector<std::string>> rows;
    double best = -std::numeric_limits<double>::infinity();
    while (text::next_line(in, line)) {
        auto fields = text::split_record(line, ',');
        if (fields.size() != header.size()) throw DataError("profile table row has the wrong number of fields");
        if (auto v = text::parse_double(fields[3])) best = std::max(best, *v);
        rows.push_back(std::move(fields));
    }
    const auto dir = prepare_out(o.out);
    auto f = open_out(dir / "contour.csv");
    f << "psi_s,psi_e,tau,loglik,delta_loglik\n";
    for (const auto& r : rows) {
        const auto v = text::parse_double(r[3]);
        f << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << ','
          << (v ? text::format_double(*v - best) : std::string("NA")) << '\n';
    }
    manifest.input("profile", source.string());
    manifest["outputs"] = {"contour.csv"};
    manifest.write(dir);
    out << fmt::format("{} grid points\n", rows.size());
    return exit_ok;
}

json sim_document(const SimConfig& cfg, const RunConfig& run) {
    json doc;
    doc["actors"] = cfg.actors;
    doc["directionality"] = to_string(cfg.spec.dir);
    for (Side side : {Side::start, Side::end}) {
        json stats = json::array();
        stats.push_back({{"statistic", "baseline"}, {"coefficient", cfg.coef.side(side)[0]}});
        const auto& specs = cfg.spec.stats(side);
        for (std::size_t k = 0; k < specs.size(); ++k) {
            stats.push_back({{"statistic", specs[k].label()},
                             {"standardize", specs[k].standardize},
                             {"coefficient", cfg.coef.side(side)[k + 1]}});
        }
        doc[std::string(to_string(side)) + "_model"] = stats;
    }
    doc["weights"] = {{"psi_s", cfg.weights.psi_s},
                      {"psi_e", cfg.weights.psi_e},
                      {"tau", cfg.weights.tau ? json(*cfg.weights.tau) : json(nullptr)},
                      {"duration_floor", cfg.weights.duration_floor}};
    doc["stop_rule"] = {{"events", cfg.events}, {"horizon", cfg.horizon ? json(*cfg.horizon) : json(nullptr)}};
    if (run.simulate.cyclic_attribute) {
        doc["attribute"] = {{"name", run.simulate.cyclic_attribute->first},
                            {"levels", run.simulate.cyclic_attribute->second}};
    }
    doc["seed"] = cfg.seed;
    doc["rng"] = "mt19937_64 seeded with SplitMix64(SplitMix64(seed) xor replication)";
    return doc;
}

int cmd_simulate(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
    Manifest manifest("simulate", args);
    if (o.config.empty()) throw ConfigError("--config PATH is required");
    const auto run = load_config(o.config);
    auto cfg = run.sim_config();
    if (o.seed) cfg.seed = *o.seed;
    const auto history = simulate(cfg);
    const auto dir = prepare_out(o.out);
    write_event_history(history, dir / "events.csv");
    CovariateSet cov = cfg.covariates;
    cov.resize(cfg.actors);
    auto actors = open_out(dir / "actors.csv");
    write_actor_attributes(history.actors, cov, actors);
    manifest.config(o.config);
    manifest["seed"] = cfg.seed;
    manifest["simulation"] = sim_document(cfg, run);
    manifest["outputs"] = {"events.csv", "actors.csv"};
    manifest.write(dir);
    out << fmt::format("{} events over {} actors, last transition at {}\n", history.size(), cfg.actors,
                       text::format_double(history.observation_end.value_or(0.0)));
    return exit_ok;
}

int cmd_recover(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
    Manifest manifest("recover", args);
    if (o.config.empty()) throw ConfigError("--config PATH is required");
    const auto run = load_config(o.config);
    auto cfg = run.sim_config();
    if (o.seed) cfg.seed = *o.seed;
    const std::size_t reps = o.replications.value_or(run.simulate.replications);
    const auto summary = recovery_study(cfg, reps, run.grid, o.workers, run.optimizer);
    const auto dir = prepare_out(o.out);
    {
        auto rows = open_out(dir / "replications.csv");
        auto table = open_out(dir / "summary.csv");
        write_recovery(summary, rows, table);
    }
    manifest.config(o.config);
    manifest["seed"] = cfg.seed;
    manifest["replications"] = reps;
    manifest["workers"] = o.workers;
    manifest["simulation"] = sim_document(cfg, run);
    manifest["outputs"] = {"replications.csv", "summary.csv"};
    manifest.write(dir);
    std::ostringstream discard;
    write_recovery(summary, discard, out);
    return exit_ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Duration relational event models: validate, fit, profile and simulate", "durem"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool data) {
        sub->add_option("--config", o.config, "INI configuration file");
        sub->add_option("--out", o.out, "output directory");
        if (data) {
            sub->add_option("--events", o.events, "event file");
            sub->add_option("--actors", o.actors, "actor attribute file");
            sub->add_option("--ties", o.ties, "dyadic tie file");
        }
        sub->add_option("--workers", o.workers, "grid search threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "random seed");
    };
    auto* validate = app.add_subcommand("validate", "check an event file and print the risk-set timeline");
    add_common(validate, true);
    auto* fit = app.add_subcommand("fit", "grid search over (psi_s, psi_e, tau) with maximum likelihood");
    add_common(fit, true);
    auto* stats = app.add_subcommand("stats", "export the design array at the [weights] point");
    add_common(stats, true);
    auto* profile = app.add_subcommand("profile", "contour table from a fit directory");
    add_common(profile, false);
    profile->add_option("--fit", o.fit_dir, "directory written by `durem fit`");
    auto* sim = app.add_subcommand("simulate", "generate an event history from the [simulate] section");
    add_common(sim, false);
    auto* recover = app.add_subcommand("recover", "parameter recovery study over replications");
    add_common(recover, false);
    recover->add_option("--replications", o.replications, "number of replications");

    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream msg_out;
        std::ostringstream msg_err;
        const int code = app.exit(e, msg_out, msg_err);
        out << msg_out.str();
        err << msg_err.str();
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*validate) return cmd_validate(o, args, out);
        if (*fit) return cmd_fit(o, args, out, err);
        if (*stats) return cmd_stats(o, args, out, err);
        if (*profile) return cmd_profile(o, args, out);
        if (*sim) return cmd_simulate(o, args, out);
        if (*recover) return cmd_recover(o, args, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const DataError& e) {
        print_report(e.report(), err);
        err << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const NumericError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::invalid_argument& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_config;
}

}  // namespace durem::cli
