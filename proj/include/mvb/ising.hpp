#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "mvb/distribution.hpp"

namespace mvb {

/// Ising model on {0,1}^k: diagonal entries are main effects, off-diagonal
/// entries pairwise interactions. Theta need not be positive semi-definite.
class IsingParams {
public:
    IsingParams() = default;
    /// Zero parameters.
    explicit IsingParams(int k);
    /// Requires a finite symmetric k x k matrix.
    explicit IsingParams(Eigen::MatrixXd theta);

    int dim() const { return static_cast<int>(theta_.rows()); }
    const Eigen::MatrixXd& theta() const { return theta_; }
    /// Sets entries (i, j) and (j, i); 0-based.
    void set(int i, int j, double value);

private:
    Eigen::MatrixXd theta_;
};

/// sum_j theta_jj y_j + sum_{j<j'} theta_jj' y_j y_j'.
double ising_energy(const IsingParams& theta, const Outcome& y);

/// log Z by enumeration over all 2^k outcomes, max-shifted.
double ising_log_partition(const IsingParams& theta, bool force_large = false);

double ising_log_density(const IsingParams& theta, const Outcome& y);

/// theta_jj = f^j and theta_jj' = f^jj'. Throws std::invalid_argument
/// ("not pairwise-representable") when some |f^tau| with |tau| >= 3
/// exceeds 1e-12.
IsingParams mvb_to_ising(const NaturalParams& f);

/// The inverse embedding: f^j = theta_jj, f^jj' = theta_jj', higher orders zero.
NaturalParams ising_to_mvb(const IsingParams& theta);

struct ParameterCounts {
    int k = 0;
    std::uint64_t mvb = 0;
    std::uint64_t ising = 0;
    std::uint64_t gaussian = 0;
};

/// (2^k - 1, k(k+1)/2, k + k(k+1)/2).
ParameterCounts parameter_counts(int k);

}  // namespace mvb
