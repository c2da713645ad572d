#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvb/distribution.hpp"
#include "mvb/subset_lattice.hpp"

namespace mvb {

/// n rows of (binary outcome y(i) in {0,1}^k, covariates x(i) in R^p).
class Dataset {
public:
    Dataset() = default;
    Dataset(int k, std::vector<Outcome> outcomes, Eigen::MatrixXd covariates);
    /// y is n x k with entries exactly 0 or 1; x is n x p.
    static Dataset from_matrices(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x);

    int k() const { return k_; }
    int p() const { return static_cast<int>(x_.cols()); }
    std::size_t n() const { return y_.size(); }
    const std::vector<Outcome>& outcomes() const { return y_; }
    const Eigen::MatrixXd& covariates() const { return x_; }

private:
    int k_ = 0;
    std::vector<Outcome> y_;
    Eigen::MatrixXd x_;
};

/// Coefficient vectors c^tau in R^{p+1} (intercept first) for every
/// nonempty tau, plus fit metadata. Row tau.mask() - 1 of coef() is c^tau.
/// The flat parameter layout is subsets in mask order, and within a
/// subset j = 0..p.
class MvbGlmModel {
public:
    MvbGlmModel() = default;
    /// All-zero coefficients.
    MvbGlmModel(int k, int p);
    MvbGlmModel(int k, Eigen::MatrixXd coef);

    int k() const { return k_; }
    int p() const { return static_cast<int>(coef_.cols()) - 1; }
    std::size_t num_params() const { return static_cast<std::size_t>(coef_.size()); }

    const Eigen::MatrixXd& coef() const { return coef_; }
    Eigen::MatrixXd& coef() { return coef_; }
    Eigen::VectorXd coef_of(const Subset& tau) const;
    void set_coef(const Subset& tau, const Eigen::VectorXd& c);

    Eigen::VectorXd flat() const;
    void set_flat(const Eigen::VectorXd& theta);

    bool converged = false;
    int iterations = 0;
    double final_nll = 0.0;
    /// Objective after each accepted iteration, starting at the initial
    /// point. Successive entries are linked by accurately computed
    /// per-step decrements, so the sequence is exactly non-increasing.
    std::vector<double> trace;

private:
    int k_ = 0;
    Eigen::MatrixXd coef_;
};

inline std::size_t flat_index(Mask tau, int j, int p) {
    return static_cast<std::size_t>(tau - 1) * static_cast<std::size_t>(p + 1) +
           static_cast<std::size_t>(j);
}

/// f^tau(x) = c_0^tau + sum_j c_j^tau x_j.
NaturalParams linear_predictor(const MvbGlmModel& model, std::span<const double> x);

/// natural_to_general(linear_predictor(model, x)).
GeneralParams predict(const MvbGlmModel& model, std::span<const double> x);

double negative_log_likelihood(const MvbGlmModel& model, const Dataset& data, int threads = 1);

/// Entry (tau, j) = sum_i (E[B^tau] at x(i) - B^tau(y(i))) x_j(i), x_0 = 1.
Eigen::VectorXd nll_gradient(const MvbGlmModel& model, const Dataset& data, int threads = 1);

/// Entry ((tau1,j),(tau2,m)) = sum_i cov(B^tau1, B^tau2) at x(i) x_j(i) x_m(i).
Eigen::MatrixXd nll_hessian(const MvbGlmModel& model, const Dataset& data, int threads = 1);

/// Likelihood evaluation bound to one dataset. After evaluate(), the
/// per-sample cell probabilities are kept so that decrease()
/// can report NLL(theta) - NLL(current) without the cancellation of
/// subtracting two large sums.
class LikelihoodEvaluator {
public:
    LikelihoodEvaluator(const Dataset& data, int threads = 1);

    struct Result {
        double nll = 0.0;
        Eigen::VectorXd gradient;
        Eigen::MatrixXd hessian;
    };

    /// Evaluates at `coef` and makes it the reference point.
    Result evaluate(const Eigen::MatrixXd& coef, bool want_gradient, bool want_hessian);
    /// NLL(coef) - NLL(reference); +inf when non-finite.
    double decrease(const Eigen::MatrixXd& coef) const;

    const Dataset& data() const { return data_; }

private:
    const Dataset& data_;
    int threads_;
    Eigen::MatrixXd design_;    // n x (p+1), leading column of ones
    Eigen::MatrixXd coef_ref_;  // reference coefficients
    Eigen::MatrixXd q_ref_;     // n x 2^k cell probabilities at the reference
};

struct FitOptions {
    double gtol = 1e-8;
    int max_iter = 100;
    /// Fit on centered and scaled covariates, then map back.
    bool standardize = false;
    int threads = 1;
    /// |c| beyond this is reported as complete separation.
    double coef_bound = 30.0;
    /// Receives non-fatal diagnostics; ignored when empty.
    std::function<void(const std::string&)> warn;
};

/// Damped Newton-Raphson from c = 0: solves H d = -g (ridge-damped when
/// the factorization fails), halves the step until the NLL does not
/// increase, and stops once max|g| < gtol or after max_iter iterations.
/// Throws NumericError on divergence or suspected separation.
MvbGlmModel fit(const Dataset& data, const FitOptions& options = {});

/// Draws one outcome per covariate row from the fitted model.
std::vector<Outcome> simulate_outcomes(const MvbGlmModel& model, const Eigen::MatrixXd& x,
                                       Generator& gen);

}  // namespace mvb
