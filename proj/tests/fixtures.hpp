#pragma once

// Fixed-seed synthetic datasets shared by the unit and acceptance suites.

#include <cstdint>

#include "mvb/glm.hpp"
#include "oracles.hpp"

namespace fixtures {

/// k=2, p=1 model used for coefficient recovery.
inline Eigen::MatrixXd planted_glm_truth() {
    Eigen::MatrixXd truth(3, 2);
    truth << -0.5, 1.0,   // f^1
        0.3, -0.8,        // f^2
        0.9, 0.5;         // f^12
    return truth;
}

/// Standard normal covariates and outcomes simulated from `truth`, both
/// driven by `seed`.
inline mvb::Dataset simulate(int k, const Eigen::MatrixXd& truth, int n, std::uint64_t seed) {
    oracle::Rng rng(seed);
    const auto p = truth.cols() - 1;
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.normal();
    }
    mvb::Generator gen(seed);
    return mvb::Dataset(k, mvb::simulate_outcomes(mvb::MvbGlmModel(k, truth), x, gen), x);
}

inline mvb::Dataset planted_glm_dataset(int n, std::uint64_t seed) {
    return simulate(2, planted_glm_truth(), n, seed);
}

/// k=2, p=5 with two active covariates per subset.
inline Eigen::MatrixXd planted_sparse_truth() {
    Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(3, 6);
    truth(0, 0) = -0.3;  // f^1
    truth(0, 1) = 0.8;
    truth(0, 2) = -0.6;
    truth(1, 0) = 0.2;   // f^2
    truth(1, 3) = 0.7;
    truth(1, 4) = -0.5;
    truth(2, 0) = 0.5;   // f^12
    truth(2, 1) = 0.6;
    truth(2, 5) = -0.7;
    return truth;
}

inline constexpr std::uint64_t kSparseSeed = 1;

inline mvb::Dataset planted_sparse_dataset() {
    return simulate(2, planted_sparse_truth(), 2000, kSparseSeed);
}

/// Standard normal covariates with outcomes uniform over all cells.
inline mvb::Dataset random_dataset(oracle::Rng& rng, int k, int p, int n) {
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    }
    std::vector<mvb::Outcome> y;
    for (int i = 0; i < n; ++i) {
        y.emplace_back(static_cast<mvb::Mask>(rng.below(1 << k)), k);
    }
    return mvb::Dataset(k, std::move(y), std::move(x));
}

/// Coefficients drawn from N(0, scale^2).
inline mvb::MvbGlmModel random_model(oracle::Rng& rng, int k, int p, double scale = 0.7) {
    mvb::MvbGlmModel m(k, p);
    for (Eigen::Index r = 0; r < m.coef().rows(); ++r) {
        for (Eigen::Index c = 0; c < m.coef().cols(); ++c) m.coef()(r, c) = scale * rng.normal();
    }
    return m;
}

/// Textbook scalar logistic regression by IRLS on the normal equations,
/// written independently of the multivariate code.
inline Eigen::VectorXd scalar_logistic_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd z(n, x.cols() + 1);
    z.col(0).setOnes();
    z.rightCols(x.cols()) = x;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(z.cols());
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd eta = z * beta;
        Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).matrix();
        Eigen::VectorXd work = eta + ((y - mu).array() / w.array()).matrix();
        Eigen::MatrixXd ztwz = z.transpose() * w.asDiagonal() * z;
        Eigen::VectorXd next = ztwz.ldlt().solve(z.transpose() * w.asDiagonal() * work);
        const double delta = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        if (delta < 1e-14) break;
    }
    return beta;
}

}  // namespace fixtures
