#include "durem/estimation.hpp"

#include "durem/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

namespace durem {

std::string_view to_string(FitStatus status) {
    switch (status) {
        case FitStatus::converged: return "converged";
        case FitStatus::max_iterations: return "max_iterations";
        case FitStatus::line_search_failed: return "line_search_failed";
    }
    return "unknown";
}

std::vector<std::string> parameter_labels(const DesignArray& design) {
    std::vector<std::string> out;
    for (Side side : {Side::start, Side::end}) {
        const std::string prefix = side == Side::start ? "start:" : "end:";
        out.push_back(prefix + "baseline");
        for (const auto& c : design.block(side).columns) out.push_back(prefix + c);
    }
    return out;
}

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Throws when -H has a (numerically) zero eigenvalue.
void check_rank(const Eigen::MatrixXd& hessian, const std::vector<std::string>& labels) {
    const Eigen::MatrixXd info = -hessian;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    if (eig.info() != Eigen::Success) throw NumericError("eigen-decomposition of the information matrix failed");
    const auto& values = eig.eigenvalues();  // ascending
    const double top = std::max(values.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    if (values[0] > 1e-10 * top) return;

    std::set<std::size_t> involved;
    for (Eigen::Index k = 0; k < values.size() && values[k] <= 1e-10 * top; ++k) {
        const Eigen::VectorXd v = eig.eigenvectors().col(k);
        const double scale = max_abs(v);
        for (Eigen::Index c = 0; c < v.size(); ++c) {
            if (std::abs(v[c]) >= 0.1 * scale) involved.insert(static_cast<std::size_t>(c));
        }
    }
    std::vector<std::string> names;
    for (auto c : involved) names.push_back(labels[c]);
    throw SingularDesignError(fmt::format("singular information matrix; collinear or constant parameters: {}",
                                          fmt::join(names, ", ")),
                              names);
}

}  // namespace

BetaFit fit_beta(const DesignArray& design, const Coefficients& init, const OptimizerOptions& options) {
    check_coefficients(design, init);
    const auto labels = parameter_labels(design);
    const std::size_t n_start = init.start.size();

    Eigen::VectorXd beta = init.stacked();
    auto current = evaluate_derivatives(design, init, true);
    if (!std::isfinite(current.loglik)) {
        throw NumericError("log-likelihood is not finite at the starting coefficients");
    }
    check_rank(current.hessian, labels);

    BetaFit fit;
    fit.loglik_trace.push_back(current.loglik);
    fit.convergence.status = FitStatus::max_iterations;

    int it = 0;
    for (; it < options.max_iter; ++it) {
        if (max_abs(current.gradient) <= options.tol) {
            fit.convergence.status = FitStatus::converged;
            break;
        }
        const Eigen::MatrixXd info = -current.hessian;
        const Eigen::VectorXd delta = info.ldlt().solve(current.gradient);
        if (!delta.allFinite()) throw NumericError("Newton direction is not finite");

        // Predicted gain below the rounding level of the summed loglik: the
        // comparison is noise, so the full step is taken as it is.
        const double noise = 1e-12 * std::max(1.0, std::abs(current.loglik));
        const bool polish = current.gradient.dot(delta) <= noise;

        double step = 1.0;
        bool accepted = false;
        Derivatives next;
        Eigen::VectorXd candidate;
        for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
            candidate = beta + step * delta;
            next = evaluate_derivatives(design, Coefficients::unstack(candidate, n_start), true);
            if (std::isfinite(next.loglik) && (next.loglik >= current.loglik || (polish && next.loglik >= current.loglik - noise))) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No ascent left at rounding level; fine if the score is already small.
            fit.convergence.status =
                max_abs(current.gradient) <= 1e-6 ? FitStatus::converged : FitStatus::line_search_failed;
            break;
        }
        const double change = std::abs(next.loglik - current.loglik) / std::max(1.0, std::abs(current.loglik));
        beta = candidate;
        current = std::move(next);
        fit.loglik_trace.push_back(current.loglik);
        if (max_abs(current.gradient) <= options.tol || (step == 1.0 && change < options.rel_tol)) {
            ++it;
            fit.convergence.status = FitStatus::converged;
            break;
        }
    }

    fit.coef = Coefficients::unstack(beta, n_start);
    fit.loglik = current.loglik;
    fit.hessian = current.hessian;
    fit.convergence.iterations = it;
    fit.convergence.gradient_norm = max_abs(current.gradient);
    return fit;
}

Inference standard_errors(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& beta) {
    Inference out;
    const Eigen::MatrixXd info = -hessian;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    if (eig.info() != Eigen::Success || eig.eigenvalues().size() == 0) {
        out.diagnostic = "information matrix could not be decomposed";
        return out;
    }
    const auto& values = eig.eigenvalues();
    if (values[0] <= 1e-10 * values.cwiseAbs().maxCoeff()) {
        out.diagnostic = fmt::format("information matrix is not positive definite (smallest eigenvalue {})",
                                     text::format_double(values[0]));
        return out;
    }
    const Eigen::MatrixXd cov =
        eig.eigenvectors() * values.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    for (Eigen::Index k = 0; k < beta.size(); ++k) {
        const double se = std::sqrt(cov(k, k));
        const double z = beta[k] / se;
        out.se.push_back(se);
        out.z.push_back(z);
        out.p.push_back(std::max(std::erfc(std::abs(z) / std::sqrt(2.0)), std::numeric_limits<double>::min()));
    }
    out.available = true;
    return out;
}

void GridSpec::check() const {
    if (psi_s.empty() || psi_e.empty() || tau.empty()) throw ConfigError("grid axes must not be empty");
    for (double v : psi_s) {
        if (!std::isfinite(v)) throw ConfigError("grid psi_s values must be finite");
    }
    for (double v : psi_e) {
        if (!std::isfinite(v)) throw ConfigError("grid psi_e values must be finite");
    }
    for (const auto& t : tau) {
        if (t && !(std::isfinite(*t) && *t > 0.0)) throw ConfigError("grid tau values must be positive");
    }
    if (refine_step && !(std::isfinite(*refine_step) && *refine_step > 0.0)) {
        throw ConfigError("grid refine_step must be positive");
    }
}

bool canonical_less(const GridPoint& a, const GridPoint& b) {
    if (a.psi_s != b.psi_s) return a.psi_s < b.psi_s;
    if (a.psi_e != b.psi_e) return a.psi_e < b.psi_e;
    if (a.tau.has_value() != b.tau.has_value()) return !a.tau.has_value();
    return a.tau.value_or(0.0) < b.tau.value_or(0.0);
}

bool preferred(const GridPoint& a, const GridPoint& b) {
    if (a.ok != b.ok) return a.ok;
    if (a.loglik != b.loglik) return a.loglik > b.loglik;
    if (std::abs(a.psi_s) != std::abs(b.psi_s)) return std::abs(a.psi_s) < std::abs(b.psi_s);
    if (std::abs(a.psi_e) != std::abs(b.psi_e)) return std::abs(a.psi_e) < std::abs(b.psi_e);
    if (a.tau.has_value() != b.tau.has_value()) return !a.tau.has_value();
    if (a.tau != b.tau) return *a.tau < *b.tau;
    // Remaining ties (+psi vs -psi) fall back to the canonical order.
    return canonical_less(a, b);
}

std::string format_tau(const std::optional<double>& tau) { return tau ? text::format_double(*tau) : "none"; }

namespace {

WeightParams params_of(const GridPoint& p, double floor) { return {p.psi_s, p.psi_e, p.tau, floor}; }


void fit_point(GridPoint& point, const GridSearchInput& input, const TransitionSequence& seq,
               const OptimizerOptions& options) {
    try {
        const auto design = build_design(seq, input.spec, input.history, input.covariates,
                                         params_of(point, input.duration_floor));
        const auto fit = fit_beta(design, Coefficients::zeros(design), options);
        point.coef = fit.coef;
        point.loglik = fit.loglik;
        point.convergence = fit.convergence;
        point.ok = fit.convergence.status == FitStatus::converged;
        if (!point.ok) point.error = std::string(to_string(fit.convergence.status));
    } catch (const std::exception& e) {
        point.ok = false;
        point.error = e.what();
    }
}

void fit_points(std::vector<GridPoint>& points, const GridSearchInput& input, const TransitionSequence& seq,
                int workers, const OptimizerOptions& options) {
    const auto n_workers = static_cast<std::size_t>(std::max(1, workers));
    if (n_workers == 1 || points.size() < 2) {
        for (auto& p : points) fit_point(p, input, seq, options);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, points.size()); ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < points.size(); k = next++) fit_point(points[k], input, seq, options);
        });
    }
    for (auto& t : pool) t.join();
}

// Values between the coarse neighbours of `v` on `axis`, `step` apart.
std::vector<double> refine_axis(const std::vector<double>& axis, double v, double step) {
    std::vector<double> sorted = axis;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const auto pos = std::lower_bound(sorted.begin(), sorted.end(), v);
    const double lo = pos == sorted.begin() ? v : *(pos - 1);
    const double hi = (pos == sorted.end() || pos + 1 == sorted.end()) ? v : *(pos + 1);
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(lo + static_cast<double>(k) * step);
    out.push_back(v);
    return out;
}

bool same_point(const GridPoint& a, const GridPoint& b) {
    auto close = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x)); };
    return close(a.psi_s, b.psi_s) && close(a.psi_e, b.psi_e) && a.tau.has_value() == b.tau.has_value() &&
           (!a.tau || close(*a.tau, *b.tau));
}

const GridPoint& select(const std::vector<GridPoint>& points) {
    return *std::min_element(points.begin(), points.end(),
                             [](const GridPoint& a, const GridPoint& b) { return preferred(a, b); });
}

}  // namespace

FitResult grid_search(const GridSearchInput& input, const GridSpec& grid, int workers,
                      const OptimizerOptions& options) {
    grid.check();
    input.spec.check(&input.covariates);
    const auto seq = build_transitions(input.history, input.spec.dir, input.spec.origin);

    std::vector<GridPoint> points;
    for (double s : grid.psi_s) {
        for (double e : grid.psi_e) {
            for (const auto& t : grid.tau) {
                GridPoint p;
                p.psi_s = s;
                p.psi_e = e;
                p.tau = t;
                if (std::none_of(points.begin(), points.end(), [&](const GridPoint& q) { return same_point(p, q); })) {
                    points.push_back(p);
                }
            }
        }
    }
    std::sort(points.begin(), points.end(), canonical_less);
    fit_points(points, input, seq, workers, options);

    if (grid.refine_step && select(points).ok) {
        const GridPoint best = select(points);
        std::vector<GridPoint> extra;
        for (double s : refine_axis(grid.psi_s, best.psi_s, *grid.refine_step)) {
            for (double e : refine_axis(grid.psi_e, best.psi_e, *grid.refine_step)) {
                GridPoint p;
                p.psi_s = s;
                p.psi_e = e;
                p.tau = best.tau;
                p.refined = true;
                auto known = [&](const GridPoint& q) { return same_point(p, q); };
                if (std::none_of(points.begin(), points.end(), known) &&
                    std::none_of(extra.begin(), extra.end(), known)) {
                    extra.push_back(p);
                }
            }
        }
        std::sort(extra.begin(), extra.end(), canonical_less);
        fit_points(extra, input, seq, workers, options);
        points.insert(points.end(), extra.begin(), extra.end());
        std::sort(points.begin(), points.end(), canonical_less);
    }

    const GridPoint& best = select(points);
    if (!best.ok) {
        std::string reasons;
        for (const auto& p : points) {
            reasons += fmt::format("\n  psi_s={} psi_e={} tau={}: {}", text::format_double(p.psi_s), text::format_double(p.psi_e),
                                   format_tau(p.tau), p.error);
        }
        throw EstimationError("no grid point could be fitted:" + reasons);
    }

    const auto design = build_design(seq, input.spec, input.history, input.covariates,
                                     params_of(best, input.duration_floor));
    const auto fit = fit_beta(design, best.coef, options);

    FitResult out;
    out.parameters = parameter_labels(design);
    out.coef = fit.coef;
    out.inference = standard_errors(fit.hessian, fit.coef.stacked());
    out.psi_s = best.psi_s;
    out.psi_e = best.psi_e;
    out.tau = best.tau;
    out.loglik = fit.loglik;
    out.convergence = fit.convergence;
    out.convergence.iterations += best.convergence.iterations;
    out.duration_floor = input.duration_floor;
    out.n_events = input.history.events.size();
    out.n_transitions = seq.transitions.size();
    out.profile = std::move(points);
    return out;
}

void profile_export(const FitResult& fit, std::ostream& out) {
    out << "psi_s,psi_e,tau,loglik";
    for (const auto& p : fit.parameters) out << ',' << p;
    out << '\n';
    for (const auto& p : fit.profile) {
        out << text::format_double(p.psi_s) << ',' << text::format_double(p.psi_e) << ',' << format_tau(p.tau) << ','
            << (p.ok ? text::format_double(p.loglik) : "NA");
        const auto beta = p.ok ? p.coef.stacked() : Eigen::VectorXd();
        for (std::size_t k = 0; k < fit.parameters.size(); ++k) {
            out << ',' << (p.ok ? text::format_double(beta[static_cast<Eigen::Index>(k)]) : "NA");
        }
        out << '\n';
    }
}

void coefficient_export(const FitResult& fit, std::ostream& out) {
    out << "# psi_s=" << text::format_double(fit.psi_s) << '\n';
    out << "# psi_e=" << text::format_double(fit.psi_e) << '\n';
    out << "# tau=" << format_tau(fit.tau) << '\n';
    out << "# loglik=" << text::format_double(fit.loglik) << '\n';
    out << "parameter,estimate,se,z,p\n";
    const auto beta = fit.coef.stacked();
    for (std::size_t k = 0; k < fit.parameters.size(); ++k) {
        out << fit.parameters[k] << ',' << text::format_double(beta[static_cast<Eigen::Index>(k)]);
        if (fit.inference.available) {
            out << ',' << text::format_double(fit.inference.se[k]) << ',' << text::format_double(fit.inference.z[k]) << ','
                << text::format_double(fit.inference.p[k]);
        } else {
            out << ",NA,NA,NA";
        }
        out << '\n';
    }
}

}  // namespace durem
