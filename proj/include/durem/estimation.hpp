#pragma once

#include "durem/likelihood.hpp"

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace durem {

struct OptimizerOptions {
    double tol{1e-8};       // on the max-norm of the score
    double rel_tol{1e-10};  // relative log-likelihood change after a full step
    int max_iter{100};
    int max_halvings{50};
};

enum class FitStatus { converged, max_iterations, line_search_failed };
std::string_view to_string(FitStatus status);

struct Convergence {
    int iterations{0};
    double gradient_norm{0.0};
    FitStatus status{FitStatus::converged};
};

struct BetaFit {
    Coefficients coef;
    double loglik{0.0};
    Convergence convergence;
    Eigen::MatrixXd hessian;
    std::vector<double> loglik_trace;  // after every accepted step, starting at init
};

// The negative Hessian is rank deficient; `columns` names the parameters
// involved in the dependency.
class SingularDesignError : public NumericError {
public:
    SingularDesignError(const std::string& what, std::vector<std::string> columns)
        : NumericError(what), columns_(std::move(columns)) {}
    [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }

private:
    std::vector<std::string> columns_;
};

// "start:baseline", "start:<column>", ..., "end:baseline", "end:<column>", ...
std::vector<std::string> parameter_labels(const DesignArray& design);

// Newton-Raphson with step halving, maximizing the log-likelihood in the
// coefficients for a fixed design. Throws SingularDesignError when the
// design is collinear.
BetaFit fit_beta(const DesignArray& design, const Coefficients& init, const OptimizerOptions& options = {});

struct Inference {
    std::vector<double> se;
    std::vector<double> z;
    std::vector<double> p;
    bool available{false};
    std::string diagnostic;
};

// se = sqrt(diag((-H)^-1)), z = beta / se, two-sided normal p-values.
Inference standard_errors(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& beta);

struct GridSpec {
    std::vector<double> psi_s{0.0};
    std::vector<double> psi_e{0.0};
    std::vector<std::optional<double>> tau{std::nullopt};
    // Second pass at this spacing between the coarse neighbours of the optimum.
    std::optional<double> refine_step;

    void check() const;
};

struct GridPoint {
    double psi_s{0.0};
    double psi_e{0.0};
    std::optional<double> tau;
    bool ok{false};
    double loglik{0.0};
    Coefficients coef;
    Convergence convergence;
    std::string error;
    bool refined{false};
};

// Canonical order: psi_s, psi_e, then tau with "none" first.
bool canonical_less(const GridPoint& a, const GridPoint& b);
// True when `a` should be selected over `b`: larger loglik; ties go to
// smaller |psi_s|, then |psi_e|, then absent tau, then smaller tau.
bool preferred(const GridPoint& a, const GridPoint& b);

struct FitResult {
    std::vector<std::string> parameters;
    Coefficients coef;
    Inference inference;
    double psi_s{0.0};
    double psi_e{0.0};
    std::optional<double> tau;
    double loglik{0.0};
    Convergence convergence;
    double duration_floor{0.0};
    std::size_t n_events{0};
    std::size_t n_transitions{0};
    std::vector<GridPoint> profile;  // canonical order
};

class EstimationError : public NumericError {
public:
    using NumericError::NumericError;
};

struct GridSearchInput {
    const EventHistory& history;
    const CovariateSet& covariates;
    const ModelSpec& spec;
    double duration_floor{1e-6};
};

// Fits every grid point (in parallel over `workers` threads), selects the
// maximum and returns its full fit with standard errors. The result does not
// depend on the worker count or the grid enumeration order.
FitResult grid_search(const GridSearchInput& input, const GridSpec& grid, int workers = 1,
                      const OptimizerOptions& options = {});

// Long table `psi_s,psi_e,tau,loglik,<parameter>...` in canonical order.
void profile_export(const FitResult& fit, std::ostream& out);

// Coefficient table with the selected hyperparameters as leading '#' lines.
void coefficient_export(const FitResult& fit, std::ostream& out);

std::string format_tau(const std::optional<double>& tau);

}  // namespace durem
