#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvb/subset_lattice.hpp"

namespace mvb {

/// Raised when a computation is well-posed in form but numerically
/// impossible: zero-probability cells, null conditioning events,
/// divergent or separated fits.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kNormalizationTol = 1e-12;
inline constexpr double kRoundTripTol = 1e-10;
inline constexpr double kIndependenceTol = 1e-8;

/// Outcome probabilities p(y), slot m = P(Y = outcome with mask m).
/// Entries are nonnegative and sum to one; zeros are allowed.
class GeneralParams {
public:
    GeneralParams() = default;
    /// Validates nonnegativity and normalization.
    GeneralParams(int k, std::vector<double> probs);

    int dim() const { return k_; }
    const std::vector<double>& probs() const { return probs_; }
    double operator[](Mask m) const { return probs_[m]; }
    double prob(const Outcome& y) const;
    bool strictly_positive() const;

private:
    int k_ = 0;
    std::vector<double> probs_;
};

/// Natural parameters f^tau, indexed by subset mask; f[0] is pinned at 0.
class NaturalParams {
public:
    NaturalParams() = default;
    /// All-zero parameters (the uniform distribution).
    explicit NaturalParams(int k);
    /// Requires f.size() == 2^k, f[0] == 0, all entries finite.
    NaturalParams(int k, std::vector<double> f);

    int dim() const { return k_; }
    const std::vector<double>& values() const { return f_; }
    double operator[](Mask m) const { return f_[m]; }
    double at(const Subset& tau) const;
    /// Sets f^tau for nonempty tau.
    void set(const Subset& tau, double value);

private:
    int k_ = 0;
    std::vector<double> f_;
};

/// S^tau = sum over tau0 ⊆ tau of f^tau0.
struct SFunctionTable {
    int k = 0;
    std::vector<double> s;
};

/// First and second moments of the interaction statistics B^tau(Y).
/// cov is indexed by masks on both axes; row and column 0 are zero.
struct MomentTable {
    int k = 0;
    std::vector<double> mean;
    Eigen::MatrixXd cov;
};

SFunctionTable s_from_f(const NaturalParams& f);

/// b(f) = log sum over all 2^k subsets of exp(S^tau), including the
/// empty set's exp(0). Max-shifted.
double log_partition(const NaturalParams& f);

NaturalParams general_to_natural(const GeneralParams& p);
GeneralParams natural_to_general(const NaturalParams& f);

/// log p(y) = S^{support(y)} - b(f).
double log_density(const NaturalParams& f, const Outcome& y);

/// Distribution of the coordinates in `keep`, re-indexed 1..|keep| in
/// ascending node order.
GeneralParams marginal(const GeneralParams& p, const Subset& keep);

/// Distribution of `target` given Y_given = given_values. `given_values`
/// is a full k-dimensional outcome; only its bits inside `given` are read,
/// and bits outside `given` must be zero. Coordinates outside target and
/// given are marginalized first.
GeneralParams conditional(const GeneralParams& p, const Subset& target, const Subset& given,
                          const Outcome& given_values);

struct Violation {
    Subset tau;
    double value = 0.0;
};

struct IndependenceReport {
    bool independent = true;
    /// Sorted by |value| descending.
    std::vector<Violation> violations;
};

/// Full mutual independence: every f^tau with |tau| >= 2 within tol.
IndependenceReport independence_test_elementwise(const NaturalParams& f,
                                                 double tol = kIndependenceTol);

/// Marginal independence of two disjoint node groups: every natural
/// parameter touching both groups is within tol. When the groups do not
/// cover all k nodes, the check runs on the natural parameters of the
/// marginal over their union (violations keep the original node labels).
IndependenceReport independence_test_groups(const NaturalParams& f, const Subset& group_a,
                                            const Subset& group_b, double tol = kIndependenceTol);

/// One line per violation, "tau<TAB>value".
std::string format_independence_report(const IndependenceReport& report);

/// psi(mu) = E[exp(mu . Y)].
double mgf(const NaturalParams& f, std::span<const double> mu);

/// E[B^tau(Y)] for every tau, by superset sums of the cell probabilities.
std::vector<double> mean_statistics(const NaturalParams& f);

/// mean plus the full 2^k x 2^k covariance. Memory is 8 * 4^k bytes, so
/// this is meant for small k.
MomentTable moments(const NaturalParams& f);

/// 64-bit Mersenne Twister (std::mt19937_64, whose output sequence is
/// fixed by the standard). Uniforms on [0, 1) take the top 53 bits of
/// each draw and scale by 2^-53, so sampling is identical on every
/// conforming platform.
class Generator {
public:
    explicit Generator(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// n i.i.d. draws by inverse CDF over the outcome table in mask order.
std::vector<Outcome> sample(const GeneralParams& p, std::size_t n, Generator& gen);
std::vector<Outcome> sample(const GeneralParams& p, std::size_t n, std::uint64_t seed);

}  // namespace mvb
