#pragma once

#include "durem/statistics.hpp"

#include <Eigen/Dense>

#include <vector>

namespace durem {

// Coefficients of each side; element 0 is the baseline (intercept), followed
// by one entry per design column.
struct Coefficients {
    std::vector<double> start;
    std::vector<double> end;

    static Coefficients zeros(const DesignArray& design);
    [[nodiscard]] const std::vector<double>& side(Side s) const { return s == Side::start ? start : end; }
    [[nodiscard]] std::size_t size() const { return start.size() + end.size(); }

    // Stacked (start..., end...) vector and back.
    [[nodiscard]] Eigen::VectorXd stacked() const;
    static Coefficients unstack(const Eigen::VectorXd& v, std::size_t n_start);
};

// Throws ConfigError when coefficient lengths do not match the design.
void check_coefficients(const DesignArray& design, const Coefficients& coef);

struct LikelihoodValue {
    double loglik{0.0};
    std::vector<double> per_transition;
};

// Rates exp(baseline + beta'x) for the start rows, then the end rows, of
// transition m.
std::vector<double> intensities(std::size_t m, const DesignArray& design, const Coefficients& coef);

// log of the probability that the observed dyad is the next transition.
double transition_log_prob(std::size_t m, const DesignArray& design, const Coefficients& coef);

// log Lambda - Lambda dt for the total rate Lambda of transition m.
double interevent_log_density(std::size_t m, const DesignArray& design, const Coefficients& coef, double dt);

LikelihoodValue log_likelihood(const DesignArray& design, const Coefficients& coef, bool keep_terms = false);

Eigen::VectorXd score(const DesignArray& design, const Coefficients& coef);
Eigen::MatrixXd hessian(const DesignArray& design, const Coefficients& coef);

// Log-likelihood, gradient and Hessian in one pass over the design.
struct Derivatives {
    double loglik{0.0};
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};
Derivatives evaluate_derivatives(const DesignArray& design, const Coefficients& coef, bool with_hessian = true);

}  // namespace durem
