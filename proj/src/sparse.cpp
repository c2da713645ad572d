#include "mvb/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "format.hpp"

namespace mvb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative nudge applied to lambda_max so the first grid point is exactly sparse.
constexpr double kLambdaMaxMargin = 1e-8;

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_lambda(double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("penalty weights must be finite and nonnegative");
    }
}

// Per-coordinate penalty: column 0 (intercepts) is never penalized.
Eigen::MatrixXd penalty_matrix(const PenaltySpec& pen, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index j = 1; j < cols; ++j) lam(r, j) = pen[static_cast<Mask>(r + 1)];
    }
    return lam;
}

double penalty_value(const Eigen::MatrixXd& lam, const Eigen::MatrixXd& coef) {
    return (lam.array() * coef.array().abs()).sum();
}

// Averaged smooth gradient in coefficient layout.
Eigen::MatrixXd gradient_matrix(const Eigen::VectorXd& grad, Eigen::Index rows, Eigen::Index cols,
                                double n) {
    return Eigen::Map<const RowMajor>(grad.data(), rows, cols) / n;
}

double coordinate_violation(double c, double g, double lam) {
    if (lam == 0.0) return std::abs(g);
    if (c == 0.0) return std::max(0.0, std::abs(g) - lam);
    return std::abs(g + (c > 0.0 ? lam : -lam));
}

KktReport violation_report(const Eigen::MatrixXd& coef, const Eigen::MatrixXd& g,
                           const Eigen::MatrixXd& lam, double ktol) {
    KktReport rep;
    for (Eigen::Index r = 0; r < coef.rows(); ++r) {
        for (Eigen::Index j = 0; j < coef.cols(); ++j) {
            const double v = coordinate_violation(coef(r, j), g(r, j), lam(r, j));
            if (!(v <= rep.max_violation)) {
                rep.max_violation = v;
                rep.worst_index = static_cast<std::size_t>(r * coef.cols() + j);
            }
        }
    }
    rep.satisfied = rep.max_violation <= ktol;
    return rep;
}

double soft_threshold(double v, double t) {
    if (std::abs(v) <= t) return 0.0;
    return v > 0.0 ? v - t : v + t;
}

void require_dims(const PenaltySpec& pen, const Dataset& data) {
    if (pen.dim() != data.k()) {
        throw std::invalid_argument("penalty dimension " + std::to_string(pen.dim()) +
                                    " does not match data k=" + std::to_string(data.k()));
    }
}

std::vector<double> resolve_weights(const std::vector<double>& weights, int k) {
    const std::size_t cells = lattice_size(k);
    if (weights.empty()) return std::vector<double>(cells, 1.0);
    if (weights.size() != cells) {
        throw std::invalid_argument("penalty weights need one entry per subset (2^k)");
    }
    for (std::size_t m = 1; m < cells; ++m) check_lambda(weights[m]);
    return weights;
}

std::size_t nonzero_count(const Eigen::MatrixXd& coef) {
    return static_cast<std::size_t>((coef.array() != 0.0).count());
}

}  // namespace

PenaltySpec::PenaltySpec(int k, double lambda) : k_(k) {
    check_dimension(k, true);
    check_lambda(lambda);
    lambda_.assign(lattice_size(k), lambda);
    lambda_[0] = 0.0;
}

PenaltySpec::PenaltySpec(int k, std::vector<double> lambda) : k_(k), lambda_(std::move(lambda)) {
    check_dimension(k, true);
    if (lambda_.size() != lattice_size(k)) {
        throw std::invalid_argument("penalty needs one entry per subset (2^k)");
    }
    lambda_[0] = 0.0;
    for (double v : lambda_) check_lambda(v);
}

double PenaltySpec::at(const Subset& tau) const {
    if (tau.dim() != k_ || tau.is_empty()) throw std::invalid_argument("penalty lookup subset");
    return lambda_[tau.mask()];
}

void PenaltySpec::set(const Subset& tau, double lambda) {
    if (tau.dim() != k_ || tau.is_empty()) throw std::invalid_argument("penalty update subset");
    check_lambda(lambda);
    lambda_[tau.mask()] = lambda;
}

double penalized_objective(const MvbGlmModel& model, const Dataset& data, const PenaltySpec& pen,
                           int threads) {
    require_dims(pen, data);
    const double nll = negative_log_likelihood(model, data, threads);
    const auto lam = penalty_matrix(pen, model.coef().rows(), model.coef().cols());
    return nll / static_cast<double>(data.n()) + penalty_value(lam, model.coef());
}

KktReport kkt_check(const MvbGlmModel& model, const Dataset& data, const PenaltySpec& pen,
                    double ktol, int threads) {
    require_dims(pen, data);
    const Eigen::MatrixXd& coef = model.coef();
    const auto g = gradient_matrix(nll_gradient(model, data, threads), coef.rows(), coef.cols(),
                                   static_cast<double>(data.n()));
    return violation_report(coef, g, penalty_matrix(pen, coef.rows(), coef.cols()), ktol);
}

L1Fit fit_l1(const Dataset& data, const PenaltySpec& pen, const L1Options& options) {
    require_dims(pen, data);
    if (options.max_iter < 0) throw std::invalid_argument("max_iter must be nonnegative");
    if (!(options.ktol > 0.0) || !(options.inner_tol > 0.0)) {
        throw std::invalid_argument("tolerances must be positive");
    }
    const int k = data.k();
    const int p = data.p();
    const double n = static_cast<double>(data.n());

    MvbGlmModel model(k, p);
    Eigen::MatrixXd coef = model.coef();
    if (options.warm_start) {
        const Eigen::MatrixXd& warm = *options.warm_start;
        if (warm.rows() != coef.rows() || warm.cols() != coef.cols()) {
            throw std::invalid_argument("warm start has the wrong shape");
        }
        coef = *options.warm_start;
    }
    const Eigen::MatrixXd lam = penalty_matrix(pen, coef.rows(), coef.cols());

    LikelihoodEvaluator ev(data, options.threads);
    auto state = ev.evaluate(coef, true, false);
    if (!std::isfinite(state.nll)) throw NumericError("divergence: non-finite objective at start");
    Eigen::MatrixXd g = gradient_matrix(state.gradient, coef.rows(), coef.cols(), n);

    L1Fit out;
    double tracked = state.nll / n + penalty_value(lam, coef);
    out.trace.push_back(tracked);

    double step = 1.0;
    int iter = 0;
    bool converged = false;
    while (true) {
        if (violation_report(coef, g, lam, options.inner_tol).satisfied) {
            converged = true;
            break;
        }
        if (iter >= options.max_iter) break;

        Eigen::MatrixXd trial(coef.rows(), coef.cols());
        double change = kInf;
        bool tried = false;
        bool any_finite = false;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
            for (Eigen::Index r = 0; r < coef.rows(); ++r) {
                for (Eigen::Index j = 0; j < coef.cols(); ++j) {
                    trial(r, j) = soft_threshold(coef(r, j) - step * g(r, j), step * lam(r, j));
                }
            }
            const Eigen::MatrixXd d = trial - coef;
            if ((d.array() == 0.0).all()) break;
            tried = true;
            const double smooth = ev.decrease(trial) / n;
            if (!std::isfinite(smooth)) continue;
            any_finite = true;
            const double bound = (g.array() * d.array()).sum() + d.squaredNorm() / (2.0 * step);
            change = smooth + penalty_value(lam, trial) - penalty_value(lam, coef);
            if (smooth <= bound && change <= 0.0) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (tried && !any_finite) {
                throw NumericError("divergence: objective not finite along proximal step");
            }
            break;
        }

        const Eigen::MatrixXd s = trial - coef;
        coef = trial;
        ++iter;
        tracked += change;
        out.trace.push_back(tracked);
        if (coef.cwiseAbs().maxCoeff() > options.coef_bound) {
            throw NumericError("complete separation suspected: coefficient magnitude exceeds " +
                               std::to_string(options.coef_bound));
        }
        state = ev.evaluate(coef, true, false);
        if (!std::isfinite(state.nll)) throw NumericError("divergence: non-finite objective");
        Eigen::MatrixXd g_new = gradient_matrix(state.gradient, coef.rows(), coef.cols(), n);
        const double sy = (s.array() * (g_new - g).array()).sum();
        step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e12) : step * 2.0;
        g = std::move(g_new);
    }

    model.coef() = coef;
    model.converged = converged;
    model.iterations = iter;
    model.final_nll = state.nll;
    model.trace = out.trace;
    out.kkt = violation_report(coef, g, lam, options.ktol);
    out.objective = state.nll / n + penalty_value(lam, coef);
    out.model = std::move(model);
    return out;
}

std::size_t PathResult::best_aic() const {
    if (scores.empty()) throw std::logic_error("empty path");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i].aic < scores[best].aic) best = i;
    }
    return best;
}

std::size_t PathResult::best_bic() const {
    if (scores.empty()) throw std::logic_error("empty path");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i].bic < scores[best].bic) best = i;
    }
    return best;
}

namespace {

// Intercepts of the covariate-free fit, placed in a zero (2^k-1) x (p+1) matrix.
Eigen::MatrixXd intercept_only_start(const Dataset& data, int threads) {
    FitOptions opts;
    opts.threads = threads;
    const Dataset bare(data.k(), data.outcomes(), Eigen::MatrixXd(data.n(), 0));
    const MvbGlmModel m = fit(bare, opts);
    Eigen::MatrixXd coef =
        Eigen::MatrixXd::Zero(m.coef().rows(), static_cast<Eigen::Index>(data.p()) + 1);
    coef.col(0) = m.coef().col(0);
    return coef;
}

double lambda_max_at(const Dataset& data, const Eigen::MatrixXd& start,
                     const std::vector<double>& w, int threads) {
    const MvbGlmModel m(data.k(), start);
    const auto g = gradient_matrix(nll_gradient(m, data, threads), start.rows(), start.cols(),
                                   static_cast<double>(data.n()));
    double lmax = 0.0;
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const double weight = w[static_cast<std::size_t>(r + 1)];
        for (Eigen::Index j = 1; j < g.cols(); ++j) {
            if (weight > 0.0) lmax = std::max(lmax, std::abs(g(r, j)) / weight);
        }
    }
    return lmax * (1.0 + kLambdaMaxMargin);
}

}  // namespace

double lambda_max(const Dataset& data, const std::vector<double>& weights, int threads) {
    const auto w = resolve_weights(weights, data.k());
    return lambda_max_at(data, intercept_only_start(data, threads), w, threads);
}

PathResult regularization_path(const Dataset& data, const PathOptions& options) {
    if (options.grid_size < 1) throw std::invalid_argument("grid size must be at least 1");
    if (!(options.min_ratio > 0.0 && options.min_ratio <= 1.0)) {
        throw std::invalid_argument("min_ratio must lie in (0, 1]");
    }
    const int k = data.k();
    const auto w = resolve_weights(options.weights, k);
    Eigen::MatrixXd warm = intercept_only_start(data, options.l1.threads);

    PathResult out;
    out.lambda_max = lambda_max_at(data, warm, w, options.l1.threads);
    if (out.lambda_max == 0.0) {
        // No covariate moves the likelihood: every lambda gives the same fit.
        out.grid.push_back(0.0);
    } else {
        for (int i = 0; i < options.grid_size; ++i) {
            const double frac =
                options.grid_size == 1 ? 0.0 : static_cast<double>(i) / (options.grid_size - 1);
            out.grid.push_back(out.lambda_max * std::pow(options.min_ratio, frac));
        }
    }

    const double n = static_cast<double>(data.n());
    for (double lambda : out.grid) {
        std::vector<double> lam(w.size());
        for (std::size_t m = 0; m < w.size(); ++m) lam[m] = lambda * w[m];
        L1Options l1 = options.l1;
        l1.warm_start = warm;
        auto res = fit_l1(data, PenaltySpec(k, std::move(lam)), l1);
        warm = res.model.coef();
        PathScore sc;
        sc.lambda = lambda;
        sc.nll = res.model.final_nll;
        sc.df = nonzero_count(res.model.coef());
        sc.aic = 2.0 * sc.nll + 2.0 * static_cast<double>(sc.df);
        sc.bic = 2.0 * sc.nll + std::log(n) * static_cast<double>(sc.df);
        out.scores.push_back(sc);
        out.kkt.push_back(res.kkt);
        out.models.push_back(std::move(res.model));
    }
    return out;
}

std::string path_to_csv(const PathResult& path) {
    std::string out = "lambda,nll,df,aic,bic\n";
    for (const auto& s : path.scores) {
        out += format_double(s.lambda) + "," + format_double(s.nll) + "," + std::to_string(s.df) +
               "," + format_double(s.aic) + "," + format_double(s.bic) + "\n";
    }
    return out;
}

Graph extract_graph(const NaturalParams& f, double tol) {
    if (!(tol >= 0.0)) throw std::invalid_argument("tolerance must be nonnegative");
    Graph g;
    g.k = f.dim();
    for (Mask tau = 1; tau < lattice_size(g.k); ++tau) {
        if (!(std::abs(f[tau]) > tol)) continue;
        std::vector<int> nodes;
        for (int j = 0; j < g.k; ++j) {
            if ((tau >> j) & 1u) nodes.push_back(j + 1);
        }
        if (nodes.size() == 1) {
            g.nodes.push_back(nodes[0]);
        } else if (nodes.size() == 2) {
            g.edges.emplace_back(nodes[0], nodes[1]);
        } else {
            g.cliques.push_back(std::move(nodes));
        }
    }
    std::sort(g.nodes.begin(), g.nodes.end());
    std::sort(g.edges.begin(), g.edges.end());
    std::sort(g.cliques.begin(), g.cliques.end());
    return g;
}

Graph extract_graph(const MvbGlmModel& model, std::optional<std::span<const double>> x,
                    double tol) {
    if (x) return extract_graph(linear_predictor(model, *x), tol);
    std::vector<double> f(lattice_size(model.k()), 0.0);
    for (Eigen::Index r = 0; r < model.coef().rows(); ++r) f[r + 1] = model.coef()(r, 0);
    return extract_graph(NaturalParams(model.k(), std::move(f)), tol);
}

std::string graph_to_json(const Graph& g) {
    nlohmann::ordered_json j;
    j["nodes"] = g.nodes;
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : g.edges) j["edges"].push_back({a, b});
    j["cliques"] = g.cliques;
    return j.dump() + "\n";
}

std::string graph_to_dot(const Graph& g) {
    std::string out = "graph mvb {\n";
    for (int v : g.nodes) out += "  " + std::to_string(v) + ";\n";
    for (const auto& [a, b] : g.edges) {
        out += "  " + std::to_string(a) + " -- " + std::to_string(b) + ";\n";
    }
    for (const auto& c : g.cliques) {
        out += "  // clique";
        for (int v : c) out += " " + std::to_string(v);
        out += "\n";
    }
    out += "}\n";
    return out;
}

}  // namespace mvb
