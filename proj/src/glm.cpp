#include "mvb/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parallel.hpp"

namespace mvb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd make_design(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd z(x.rows(), x.cols() + 1);
    z.col(0).setOnes();
    z.rightCols(x.cols()) = x;
    return z;
}

void require_matching(const MvbGlmModel& model, const Dataset& data) {
    if (model.k() != data.k() || model.p() != data.p()) {
        throw std::invalid_argument("model (k=" + std::to_string(model.k()) + ", p=" +
                                    std::to_string(model.p()) + ") does not match data (k=" +
                                    std::to_string(data.k()) + ", p=" + std::to_string(data.p()) +
                                    ")");
    }
}

// S table for one design row: s[0] = 0, s[m] = sum over nonempty subsets of m.
void fill_s(const Eigen::MatrixXd& coef, const Eigen::Ref<const Eigen::RowVectorXd>& z, int k,
            std::vector<double>& s) {
    s[0] = 0.0;
    for (Eigen::Index r = 0; r < coef.rows(); ++r) s[r + 1] = coef.row(r).dot(z);
    subset_sum_transform(s, k);
}

double lse(const std::vector<double>& s) {
    double hi = *std::max_element(s.begin(), s.end());
    if (!std::isfinite(hi)) return hi;
    double acc = 0.0;
    for (double v : s) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

}  // namespace

Dataset::Dataset(int k, std::vector<Outcome> outcomes, Eigen::MatrixXd covariates)
    : k_(k), y_(std::move(outcomes)), x_(std::move(covariates)) {
    check_dimension(k, true);
    if (y_.empty()) throw std::invalid_argument("dataset needs at least one row");
    if (static_cast<std::size_t>(x_.rows()) != y_.size()) {
        throw std::invalid_argument("covariate rows (" + std::to_string(x_.rows()) +
                                    ") differ from outcome rows (" + std::to_string(y_.size()) +
                                    ")");
    }
    for (const auto& y : y_) {
        if (y.dim() != k) throw std::invalid_argument("outcome dimension differs from k");
    }
    if (!x_.allFinite()) throw std::invalid_argument("covariates must be finite");
}

Dataset Dataset::from_matrices(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x) {
    const int k = static_cast<int>(y.cols());
    check_dimension(k, true);
    std::vector<Outcome> rows;
    rows.reserve(static_cast<std::size_t>(y.rows()));
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        Mask bits = 0;
        for (int j = 0; j < k; ++j) {
            const double v = y(i, j);
            if (v != 0.0 && v != 1.0) {
                throw std::invalid_argument("outcome at row " + std::to_string(i + 1) +
                                            ", column " + std::to_string(j + 1) +
                                            " is not 0 or 1");
            }
            if (v == 1.0) bits |= Mask{1} << j;
        }
        rows.emplace_back(bits, k);
    }
    return Dataset(k, std::move(rows), x);
}

MvbGlmModel::MvbGlmModel(int k, int p)
    : k_(k), coef_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lattice_size(k) - 1), p + 1)) {
    check_dimension(k, true);
    if (p < 0) throw std::invalid_argument("covariate count must be nonnegative");
}

MvbGlmModel::MvbGlmModel(int k, Eigen::MatrixXd coef) : k_(k), coef_(std::move(coef)) {
    check_dimension(k, true);
    if (coef_.rows() != static_cast<Eigen::Index>(lattice_size(k) - 1) || coef_.cols() < 1) {
        throw std::invalid_argument("coefficient matrix must be (2^k - 1) x (p + 1)");
    }
    if (!coef_.allFinite()) throw std::invalid_argument("coefficients must be finite");
}

Eigen::VectorXd MvbGlmModel::coef_of(const Subset& tau) const {
    if (tau.dim() != k_ || tau.is_empty()) {
        throw std::invalid_argument("coefficient lookup needs a nonempty subset of {1..k}");
    }
    return coef_.row(tau.mask() - 1).transpose();
}

void MvbGlmModel::set_coef(const Subset& tau, const Eigen::VectorXd& c) {
    if (tau.dim() != k_ || tau.is_empty()) {
        throw std::invalid_argument("coefficient update needs a nonempty subset of {1..k}");
    }
    if (c.size() != coef_.cols()) throw std::invalid_argument("coefficient vector length != p+1");
    coef_.row(tau.mask() - 1) = c.transpose();
}

Eigen::VectorXd MvbGlmModel::flat() const {
    Eigen::VectorXd out(coef_.size());
    for (Eigen::Index r = 0; r < coef_.rows(); ++r) {
        out.segment(r * coef_.cols(), coef_.cols()) = coef_.row(r).transpose();
    }
    return out;
}

void MvbGlmModel::set_flat(const Eigen::VectorXd& theta) {
    if (theta.size() != coef_.size()) throw std::invalid_argument("parameter vector length");
    for (Eigen::Index r = 0; r < coef_.rows(); ++r) {
        coef_.row(r) = theta.segment(r * coef_.cols(), coef_.cols()).transpose();
    }
}

NaturalParams linear_predictor(const MvbGlmModel& model, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(model.p())) {
        throw std::invalid_argument("covariate vector has length " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(model.p()));
    }
    std::vector<double> f(lattice_size(model.k()), 0.0);
    for (Eigen::Index r = 0; r < model.coef().rows(); ++r) {
        double v = model.coef()(r, 0);
        for (int j = 0; j < model.p(); ++j) v += model.coef()(r, j + 1) * x[j];
        f[r + 1] = v;
    }
    return NaturalParams(model.k(), std::move(f));
}

GeneralParams predict(const MvbGlmModel& model, std::span<const double> x) {
    return natural_to_general(linear_predictor(model, x));
}

LikelihoodEvaluator::LikelihoodEvaluator(const Dataset& data, int threads)
    : data_(data), threads_(threads), design_(make_design(data.covariates())) {}

LikelihoodEvaluator::Result LikelihoodEvaluator::evaluate(const Eigen::MatrixXd& coef,
                                                          bool want_gradient, bool want_hessian) {
    const int k = data_.k();
    const auto cells = static_cast<Eigen::Index>(lattice_size(k));
    const Eigen::Index terms = cells - 1;
    const Eigen::Index width = design_.cols();
    const Eigen::Index dim = terms * width;
    const std::size_t n = data_.n();

    coef_ref_ = coef;
    q_ref_.resize(static_cast<Eigen::Index>(n), cells);

    struct Partial {
        double nll = 0.0;
        Eigen::VectorXd grad;
        Eigen::MatrixXd hess;
    };
    std::vector<Partial> partials(detail::chunk_count(n));

    detail::for_each_chunk(n, threads_, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Partial& part = partials[c];
        if (want_gradient) part.grad = Eigen::VectorXd::Zero(dim);
        if (want_hessian) part.hess = Eigen::MatrixXd::Zero(dim, dim);
        std::vector<double> s(static_cast<std::size_t>(cells));
        std::vector<double> mean(static_cast<std::size_t>(cells));
        Eigen::MatrixXd cov(terms, terms);
        for (std::size_t i = begin; i < end; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            const auto z = design_.row(row);
            fill_s(coef, z, k, s);
            const double b = lse(s);
            const Mask y = data_.outcomes()[i].bits();
            part.nll += b - s[y];
            for (Eigen::Index m = 0; m < cells; ++m) {
                mean[m] = std::exp(s[m] - b);
                q_ref_(row, m) = mean[m];
            }
            if (!want_gradient && !want_hessian) continue;
            superset_sum_transform(mean, k);
            if (want_gradient) {
                for (Eigen::Index t = 1; t < cells; ++t) {
                    const double resid =
                        mean[t] - ((static_cast<Mask>(t) & ~y) == 0 ? 1.0 : 0.0);
                    part.grad.segment((t - 1) * width, width) += resid * z.transpose();
                }
            }
            if (want_hessian) {
                for (Eigen::Index a = 1; a < cells; ++a) {
                    for (Eigen::Index bb = a; bb < cells; ++bb) {
                        const double v = mean[a | bb] - mean[a] * mean[bb];
                        cov(a - 1, bb - 1) = v;
                        cov(bb - 1, a - 1) = v;
                    }
                }
                const Eigen::MatrixXd zz = z.transpose() * z;
                for (Eigen::Index a = 0; a < terms; ++a) {
                    for (Eigen::Index bb = a; bb < terms; ++bb) {
                        part.hess.block(a * width, bb * width, width, width) += cov(a, bb) * zz;
                    }
                }
            }
        }
    });

    Result out;
    if (want_gradient) out.gradient = Eigen::VectorXd::Zero(dim);
    if (want_hessian) out.hessian = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& part : partials) {
        out.nll += part.nll;
        if (want_gradient) out.gradient += part.grad;
        if (want_hessian) out.hessian += part.hess;
    }
    if (want_hessian) {
        // only the upper block triangle was accumulated
        for (Eigen::Index a = 0; a < terms; ++a) {
            for (Eigen::Index bb = a + 1; bb < terms; ++bb) {
                out.hessian.block(bb * width, a * width, width, width) =
                    out.hessian.block(a * width, bb * width, width, width).transpose();
            }
        }
    }
    return out;
}

double LikelihoodEvaluator::decrease(const Eigen::MatrixXd& coef) const {
    if (coef_ref_.size() == 0) throw std::logic_error("decrease() called before evaluate()");
    const int k = data_.k();
    const auto cells = static_cast<Eigen::Index>(lattice_size(k));
    const Eigen::MatrixXd step = coef - coef_ref_;
    const std::size_t n = data_.n();
    std::vector<double> partials(detail::chunk_count(n), 0.0);
    // Per sample: b_new - b_old = log1p(sum_m q_old(m) expm1(dS_m)), and the
    // data term changes by -dS_y. Both are O(step) with relative rounding.
    detail::for_each_chunk(n, threads_, [&](std::size_t c, std::size_t begin, std::size_t end) {
        std::vector<double> ds(static_cast<std::size_t>(cells));
        double acc = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            fill_s(step, design_.row(row), k, ds);
            double inner = 0.0;
            for (Eigen::Index m = 0; m < cells; ++m) inner += q_ref_(row, m) * std::expm1(ds[m]);
            acc += std::log1p(inner) - ds[data_.outcomes()[i].bits()];
        }
        partials[c] = acc;
    });
    const double total = std::accumulate(partials.begin(), partials.end(), 0.0);
    return std::isfinite(total) ? total : kInf;
}

double negative_log_likelihood(const MvbGlmModel& model, const Dataset& data, int threads) {
    require_matching(model, data);
    LikelihoodEvaluator ev(data, threads);
    return ev.evaluate(model.coef(), false, false).nll;
}

Eigen::VectorXd nll_gradient(const MvbGlmModel& model, const Dataset& data, int threads) {
    require_matching(model, data);
    LikelihoodEvaluator ev(data, threads);
    return ev.evaluate(model.coef(), true, false).gradient;
}

Eigen::MatrixXd nll_hessian(const MvbGlmModel& model, const Dataset& data, int threads) {
    require_matching(model, data);
    LikelihoodEvaluator ev(data, threads);
    return ev.evaluate(model.coef(), false, true).hessian;
}

namespace {

struct Scaling {
    Eigen::RowVectorXd center;
    Eigen::RowVectorXd scale;
};

Scaling column_scaling(const Eigen::MatrixXd& x) {
    Scaling sc{Eigen::RowVectorXd::Zero(x.cols()), Eigen::RowVectorXd::Ones(x.cols())};
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double var = (x.col(j).array() - mean).square().sum() / n;
        sc.center(j) = mean;
        if (var > 0.0) sc.scale(j) = std::sqrt(var);
    }
    return sc;
}

// Ridge-damped Newton direction: solve (H + eps I) d = -g.
Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hess, const Eigen::VectorXd& grad) {
    const double diag_scale = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
    double ridge = 0.0;
    for (int attempt = 0; attempt < 30; ++attempt) {
        Eigen::MatrixXd h = hess;
        if (ridge > 0.0) h.diagonal().array() += ridge;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            Eigen::VectorXd d = ldlt.solve(-grad);
            if (d.allFinite() && d.dot(grad) < 0.0 &&
                (h * d + grad).norm() <= 1e-6 * std::max(1.0, grad.norm())) {
                return d;
            }
        }
        ridge = ridge == 0.0 ? 1e-10 * diag_scale : ridge * 10.0;
    }
    throw NumericError("divergence: Newton system could not be solved even with damping");
}

}  // namespace

MvbGlmModel fit(const Dataset& data, const FitOptions& options) {
    if (options.max_iter < 0) throw std::invalid_argument("max_iter must be nonnegative");
    if (!(options.gtol > 0.0)) throw std::invalid_argument("gtol must be positive");

    const int k = data.k();
    const int p = data.p();
    const std::size_t num_params = (lattice_size(k) - 1) * static_cast<std::size_t>(p + 1);
    if (num_params > data.n() && options.warn) {
        options.warn("model has " + std::to_string(num_params) + " free parameters but only " +
                     std::to_string(data.n()) + " samples");
    }

    Scaling sc;
    const Dataset* work = &data;
    Dataset scaled;
    if (options.standardize && p > 0) {
        sc = column_scaling(data.covariates());
        Eigen::MatrixXd x = (data.covariates().rowwise() - sc.center).array().rowwise() /
                            sc.scale.array();
        scaled = Dataset(k, data.outcomes(), std::move(x));
        work = &scaled;
    }

    LikelihoodEvaluator ev(*work, options.threads);
    MvbGlmModel model(k, p);
    Eigen::MatrixXd coef = model.coef();
    auto state = ev.evaluate(coef, true, true);
    if (!std::isfinite(state.nll)) throw NumericError("divergence: non-finite NLL at start");
    double tracked = state.nll;
    model.trace.push_back(tracked);

    int iter = 0;
    bool converged = false;
    while (true) {
        if (state.gradient.cwiseAbs().maxCoeff() < options.gtol) {
            converged = true;
            break;
        }
        if (iter >= options.max_iter) break;

        const Eigen::VectorXd dir = newton_direction(state.hessian, state.gradient);
        Eigen::MatrixXd dir_mat(coef.rows(), coef.cols());
        for (Eigen::Index r = 0; r < coef.rows(); ++r) {
            dir_mat.row(r) = dir.segment(r * coef.cols(), coef.cols()).transpose();
        }

        double step = 1.0;
        double change = kInf;
        Eigen::MatrixXd trial;
        bool any_finite = false;
        for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
            trial = coef + step * dir_mat;
            change = ev.decrease(trial);
            if (std::isfinite(change)) any_finite = true;
            if (change <= 0.0) break;
        }
        if (!(change <= 0.0)) {
            if (!any_finite) throw NumericError("divergence: NLL not finite along Newton step");
            // No representable decrease left along the Newton direction.
            break;
        }

        coef = trial;
        ++iter;
        tracked += change;
        model.trace.push_back(tracked);
        if (coef.cwiseAbs().maxCoeff() > options.coef_bound) {
            throw NumericError("complete separation suspected: coefficient magnitude exceeds " +
                               std::to_string(options.coef_bound));
        }
        state = ev.evaluate(coef, true, true);
        if (!std::isfinite(state.nll)) throw NumericError("divergence: non-finite NLL");
    }

    if (options.standardize && p > 0) {
        // f = c0' + sum_j c_j' (x_j - m_j) / s_j
        Eigen::MatrixXd back = coef;
        for (Eigen::Index r = 0; r < coef.rows(); ++r) {
            double shift = 0.0;
            for (int j = 0; j < p; ++j) {
                back(r, j + 1) = coef(r, j + 1) / sc.scale(j);
                shift += back(r, j + 1) * sc.center(j);
            }
            back(r, 0) = coef(r, 0) - shift;
        }
        coef = back;
    }

    model.coef() = coef;
    model.converged = converged;
    model.iterations = iter;
    model.final_nll = state.nll;
    return model;
}

std::vector<Outcome> simulate_outcomes(const MvbGlmModel& model, const Eigen::MatrixXd& x,
                                       Generator& gen) {
    if (x.cols() != model.p()) throw std::invalid_argument("covariate width differs from p");
    std::vector<Outcome> out;
    out.reserve(static_cast<std::size_t>(x.rows()));
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) row[j] = x(i, j);
        out.push_back(sample(predict(model, row), 1, gen).front());
    }
    return out;
}

}  // namespace mvb
