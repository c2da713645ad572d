#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvb/glm.hpp"

namespace mvb {

/// Per-subset L1 weights lambda_tau >= 0, indexed by mask (slot 0 unused).
/// Only covariate coefficients c_j^tau with j >= 1 are penalized.
class PenaltySpec {
public:
    PenaltySpec() = default;
    /// The same lambda for every nonempty tau.
    PenaltySpec(int k, double lambda);
    /// lambda.size() == 2^k; lambda[0] is ignored.
    PenaltySpec(int k, std::vector<double> lambda);

    int dim() const { return k_; }
    double operator[](Mask tau) const { return lambda_[tau]; }
    double at(const Subset& tau) const;
    void set(const Subset& tau, double lambda);
    const std::vector<double>& values() const { return lambda_; }

private:
    int k_ = 0;
    std::vector<double> lambda_;
};

/// (1/n) NLL + sum_tau lambda_tau sum_{j>=1} |c_j^tau|.
double penalized_objective(const MvbGlmModel& model, const Dataset& data, const PenaltySpec& pen,
                           int threads = 1);

struct KktReport {
    bool satisfied = false;
    /// Largest violation over all coordinates, in units of the averaged gradient.
    double max_violation = 0.0;
    /// Flat index of the worst coordinate.
    std::size_t worst_index = 0;
};

/// Optimality certificate for `model` under `pen`, with the smooth part
/// averaged over samples: zero penalized coordinates need |g| <= lambda + ktol,
/// nonzero ones |g + lambda sign(c)| <= ktol, unpenalized ones |g| <= ktol.
KktReport kkt_check(const MvbGlmModel& model, const Dataset& data, const PenaltySpec& pen,
                    double ktol = 1e-6, int threads = 1);

struct L1Options {
    double ktol = 1e-6;
    /// The solver runs until the KKT violation drops below this.
    double inner_tol = 1e-10;
    int max_iter = 20000;
    int threads = 1;
    double coef_bound = 30.0;
    /// Starting coefficients; zero when absent.
    std::optional<Eigen::MatrixXd> warm_start;
};

struct L1Fit {
    MvbGlmModel model;
    KktReport kkt;
    /// Penalized objective at the start and after each accepted step.
    std::vector<double> trace;
    double objective = 0.0;
};

/// Proximal gradient with Barzilai-Borwein trial steps and backtracking on
/// the quadratic upper bound. Coordinates killed by the soft threshold are
/// stored as exact zeros. Throws NumericError on divergence.
L1Fit fit_l1(const Dataset& data, const PenaltySpec& pen, const L1Options& options = {});

struct PathOptions {
    int grid_size = 50;
    /// Smallest lambda on the grid relative to lambda_max.
    double min_ratio = 1e-3;
    /// Relative penalty per subset (lambda_tau = lambda * weight_tau); all ones
    /// when empty, otherwise size 2^k with slot 0 ignored.
    std::vector<double> weights;
    L1Options l1;
};

struct PathScore {
    double lambda = 0.0;
    double nll = 0.0;
    std::size_t df = 0;
    double aic = 0.0;
    double bic = 0.0;
};

struct PathResult {
    double lambda_max = 0.0;
    /// Descending.
    std::vector<double> grid;
    std::vector<MvbGlmModel> models;
    std::vector<PathScore> scores;
    std::vector<KktReport> kkt;

    std::size_t best_aic() const;
    std::size_t best_bic() const;
};

/// Smallest scalar lambda for which the intercept-only optimum satisfies the
/// KKT conditions with every covariate coefficient at zero, raised by a
/// relative 1e-8 so that fits at exactly this value return exact zeros.
double lambda_max(const Dataset& data, const std::vector<double>& weights = {}, int threads = 1);

/// Warm-started fits along a log-spaced grid from lambda_max down to
/// lambda_max * min_ratio, scored by AIC and BIC with df = nonzero count.
PathResult regularization_path(const Dataset& data, const PathOptions& options = {});

/// "lambda,nll,df,aic,bic" plus one row per grid point.
std::string path_to_csv(const PathResult& path);

/// Nodes are 1-based.
struct Graph {
    int k = 0;
    std::vector<int> nodes;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<int>> cliques;
};

/// Active main effects |f^j| > tol, edges |f^{jj'}| > tol and cliques
/// |tau| >= 3 with |f^tau| > tol.
Graph extract_graph(const NaturalParams& f, double tol);
/// Reads the structure of f(x), or of the intercepts when x is absent.
Graph extract_graph(const MvbGlmModel& model, std::optional<std::span<const double>> x,
                    double tol);

std::string graph_to_json(const Graph& g);
/// Nodes and edges; cliques appear as comments.
std::string graph_to_dot(const Graph& g);

}  // namespace mvb
