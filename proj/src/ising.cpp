#include "mvb/ising.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mvb {

namespace {

constexpr double kPairwiseTol = 1e-12;

}  // namespace

IsingParams::IsingParams(int k) {
    check_dimension(k, true);
    theta_ = Eigen::MatrixXd::Zero(k, k);
}

IsingParams::IsingParams(Eigen::MatrixXd theta) : theta_(std::move(theta)) {
    if (theta_.rows() != theta_.cols()) throw std::invalid_argument("theta must be square");
    check_dimension(static_cast<int>(theta_.rows()), true);
    if (!theta_.allFinite()) throw std::invalid_argument("theta must be finite");
    if (theta_ != theta_.transpose()) throw std::invalid_argument("theta must be symmetric");
}

void IsingParams::set(int i, int j, double value) {
    if (i < 0 || j < 0 || i >= dim() || j >= dim()) {
        throw std::invalid_argument("theta index out of range");
    }
    if (!std::isfinite(value)) throw std::invalid_argument("theta must be finite");
    theta_(i, j) = value;
    theta_(j, i) = value;
}

double ising_energy(const IsingParams& theta, const Outcome& y) {
    const int k = theta.dim();
    if (y.dim() != k) throw std::invalid_argument("outcome dimension differs from theta");
    const Eigen::MatrixXd& t = theta.theta();
    double e = 0.0;
    const Mask bits = y.bits();
    for (int j = 0; j < k; ++j) {
        if (!((bits >> j) & 1u)) continue;
        e += t(j, j);
        for (int m = j + 1; m < k; ++m) {
            if ((bits >> m) & 1u) e += t(j, m);
        }
    }
    return e;
}

double ising_log_partition(const IsingParams& theta, bool force_large) {
    const int k = theta.dim();
    check_dimension(k, force_large);
    std::vector<double> e(lattice_size(k));
    for (Mask y = 0; y < e.size(); ++y) e[y] = ising_energy(theta, Outcome(y, k));
    const double hi = *std::max_element(e.begin(), e.end());
    double acc = 0.0;
    for (double v : e) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

double ising_log_density(const IsingParams& theta, const Outcome& y) {
    return ising_energy(theta, y) - ising_log_partition(theta, true);
}

IsingParams mvb_to_ising(const NaturalParams& f) {
    const int k = f.dim();
    IsingParams out(k);
    for (Mask tau = 1; tau < lattice_size(k); ++tau) {
        const int order = std::popcount(tau);
        if (order >= 3) {
            if (std::abs(f[tau]) > kPairwiseTol) {
                throw std::invalid_argument("not pairwise-representable: f^{" +
                                            to_string(Subset(tau, k)) + "} = " +
                                            std::to_string(f[tau]));
            }
            continue;
        }
        const int i = std::countr_zero(tau);
        const int j = 31 - std::countl_zero(tau);
        out.set(i, j, f[tau]);
    }
    return out;
}

NaturalParams ising_to_mvb(const IsingParams& theta) {
    const int k = theta.dim();
    NaturalParams f(k);
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
            f.set(Subset((Mask{1} << i) | (Mask{1} << j), k), theta.theta()(i, j));
        }
    }
    return f;
}

ParameterCounts parameter_counts(int k) {
    if (k < 1 || k > 63) throw std::invalid_argument("k must lie in [1, 63]");
    ParameterCounts c;
    c.k = k;
    const auto kk = static_cast<std::uint64_t>(k);
    c.mvb = (std::uint64_t{1} << kk) - 1;
    c.ising = kk * (kk + 1) / 2;
    c.gaussian = kk + kk * (kk + 1) / 2;
    return c;
}

}  // namespace mvb
