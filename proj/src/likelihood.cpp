#include "durem/likelihood.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace durem {

Coefficients Coefficients::zeros(const DesignArray& design) {
    return {std::vector<double>(design.start.n_cols() + 1, 0.0), std::vector<double>(design.end.n_cols() + 1, 0.0)};
}

Eigen::VectorXd Coefficients::stacked() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
    for (std::size_t k = 0; k < start.size(); ++k) v[static_cast<Eigen::Index>(k)] = start[k];
    for (std::size_t k = 0; k < end.size(); ++k) v[static_cast<Eigen::Index>(start.size() + k)] = end[k];
    return v;
}

Coefficients Coefficients::unstack(const Eigen::VectorXd& v, std::size_t n_start) {
    Coefficients c;
    c.start.assign(v.data(), v.data() + n_start);
    c.end.assign(v.data() + n_start, v.data() + v.size());
    return c;
}

void check_coefficients(const DesignArray& design, const Coefficients& coef) {
    if (coef.start.size() != design.start.n_cols() + 1 || coef.end.size() != design.end.n_cols() + 1) {
        throw ConfigError(fmt::format("coefficient lengths ({}, {}) do not match the design ({}, {} incl. baselines)",
                                      coef.start.size(), coef.end.size(), design.start.n_cols() + 1,
                                      design.end.n_cols() + 1));
    }
}

namespace {

double linear_predictor(const DesignBlock& block, std::size_t r, const std::vector<double>& beta) {
    double eta = beta[0];
    const auto x = block.row(r);
    for (std::size_t k = 0; k < x.size(); ++k) eta += beta[k + 1] * x[k];
    return eta;
}

// Linear predictors of every at-risk row of transition m, start rows first.
std::vector<double> predictors(std::size_t m, const DesignArray& design, const Coefficients& coef) {
    std::vector<double> eta;
    for (Side side : {Side::start, Side::end}) {
        const auto& block = design.block(side);
        const auto& beta = coef.side(side);
        for (std::size_t r = block.begin(m); r < block.end(m); ++r) eta.push_back(linear_predictor(block, r, beta));
    }
    return eta;
}

double log_sum_exp(const std::vector<double>& eta) {
    if (eta.empty()) return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(eta.begin(), eta.end());
    if (!std::isfinite(top)) return top;
    double sum = 0.0;
    for (double e : eta) sum += std::exp(e - top);
    return top + std::log(sum);
}

double observed_predictor(std::size_t m, const DesignArray& design, const Coefficients& coef) {
    const auto& tr = design.transitions[m];
    const Side side = *tr.observed_side;
    return linear_predictor(design.block(side), tr.observed_row, coef.side(side));
}

}  // namespace

std::vector<double> intensities(std::size_t m, const DesignArray& design, const Coefficients& coef) {
    check_coefficients(design, coef);
    auto rates = predictors(m, design, coef);
    for (std::size_t r = 0; r < rates.size(); ++r) {
        rates[r] = std::exp(rates[r]);
        if (!std::isfinite(rates[r])) {
            throw NumericError(fmt::format("non-finite rate for row {} of transition {}", r, m));
        }
    }
    return rates;
}

double transition_log_prob(std::size_t m, const DesignArray& design, const Coefficients& coef) {
    check_coefficients(design, coef);
    const auto eta = predictors(m, design, coef);
    if (eta.empty() || !design.transitions[m].observed_side) {
        throw NumericError(fmt::format("transition {} has no observed dyad or an empty risk set", m));
    }
    return observed_predictor(m, design, coef) - log_sum_exp(eta);
}

double interevent_log_density(std::size_t m, const DesignArray& design, const Coefficients& coef, double dt) {
    check_coefficients(design, coef);
    const double log_total = log_sum_exp(predictors(m, design, coef));
    return log_total - std::exp(log_total) * dt;
}

LikelihoodValue log_likelihood(const DesignArray& design, const Coefficients& coef, bool keep_terms) {
    check_coefficients(design, coef);
    LikelihoodValue value;
    if (keep_terms) value.per_transition.reserve(design.size());
    for (std::size_t m = 0; m < design.size(); ++m) {
        const auto& tr = design.transitions[m];
        const auto eta = predictors(m, design, coef);
        const double log_total = log_sum_exp(eta);
        const double exposure = eta.empty() || tr.dt == 0.0 ? 0.0 : std::exp(log_total + std::log(tr.dt));
        double term = -exposure;
        if (tr.observed_side) {
            // log-probability of the dyad plus log-density of the waiting time
            term = (observed_predictor(m, design, coef) - log_total) + (log_total - exposure);
        }
        if (!std::isfinite(term)) {
            throw NumericError(fmt::format("non-finite log-likelihood contribution at transition {}", m));
        }
        value.loglik += term;
        if (keep_terms) value.per_transition.push_back(term);
    }
    return value;
}

Derivatives evaluate_derivatives(const DesignArray& design, const Coefficients& coef, bool with_hessian) {
    check_coefficients(design, coef);
    const auto n_start = static_cast<Eigen::Index>(coef.start.size());
    const auto n_total = static_cast<Eigen::Index>(coef.size());
    Derivatives out;
    out.gradient = Eigen::VectorXd::Zero(n_total);
    if (with_hessian) out.hessian = Eigen::MatrixXd::Zero(n_total, n_total);

    double exposure_total = 0.0;
    double observed_total = 0.0;
    for (std::size_t m = 0; m < design.size(); ++m) {
        const auto& tr = design.transitions[m];
        if (tr.observed_side) {
            const Side side = *tr.observed_side;
            const auto& block = design.block(side);
            const Eigen::Index offset = side == Side::start ? 0 : n_start;
            observed_total += linear_predictor(block, tr.observed_row, coef.side(side));
            out.gradient[offset] += 1.0;
            const auto x = block.row(tr.observed_row);
            for (std::size_t k = 0; k < x.size(); ++k) out.gradient[offset + static_cast<Eigen::Index>(k) + 1] += x[k];
        }
        if (tr.dt == 0.0) continue;
        const double log_dt = std::log(tr.dt);
        for (Side side : {Side::start, Side::end}) {
            const auto& block = design.block(side);
            const auto& beta = coef.side(side);
            const Eigen::Index offset = side == Side::start ? 0 : n_start;
            const std::size_t p = block.n_cols();
            for (std::size_t r = block.begin(m); r < block.end(m); ++r) {
                const double w = std::exp(linear_predictor(block, r, beta) + log_dt);
                exposure_total += w;
                const auto x = block.row(r);
                out.gradient[offset] -= w;
                for (std::size_t k = 0; k < p; ++k) out.gradient[offset + static_cast<Eigen::Index>(k) + 1] -= w * x[k];
                if (!with_hessian) continue;
                auto& h = out.hessian;
                h(offset, offset) -= w;
                for (std::size_t k = 0; k < p; ++k) {
                    const auto ik = offset + static_cast<Eigen::Index>(k) + 1;
                    const double wx = w * x[k];
                    h(ik, offset) -= wx;
                    for (std::size_t l = 0; l <= k; ++l) h(ik, offset + static_cast<Eigen::Index>(l) + 1) -= wx * x[l];
                }
            }
        }
    }
    // May be -inf or NaN on overflow; the optimizer treats that as a rejected step.
    out.loglik = observed_total - exposure_total;
    if (with_hessian) {
        // Only the lower triangle was accumulated.
        const Eigen::MatrixXd lower = out.hessian;
        out.hessian = lower.selfadjointView<Eigen::Lower>();
    }
    return out;
}

Eigen::VectorXd score(const DesignArray& design, const Coefficients& coef) {
    return evaluate_derivatives(design, coef, false).gradient;
}

Eigen::MatrixXd hessian(const DesignArray& design, const Coefficients& coef) {
    return evaluate_derivatives(design, coef, true).hessian;
}

}  // namespace durem
