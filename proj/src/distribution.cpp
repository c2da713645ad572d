#include "mvb/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "format.hpp"

namespace mvb {

namespace {

double log_sum_exp(std::span<const double> a) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : a) hi = std::max(hi, v);
    if (!std::isfinite(hi)) return hi;
    double acc = 0.0;
    for (double v : a) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

void require_same_dim(int a, int b) {
    if (a != b) {
        throw std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " +
                                    std::to_string(b));
    }
}

double normalization_tol(std::size_t n) {
    return std::max(kNormalizationTol, 4.0 * std::numeric_limits<double>::epsilon() *
                                           static_cast<double>(n));
}

// Cell probabilities exp(S - b), before wrapping in a validated object.
std::vector<double> cell_probs(const NaturalParams& f) {
    std::vector<double> s = s_from_f(f).s;
    const double b = log_sum_exp(s);
    for (double& v : s) v = std::exp(v - b);
    return s;
}

}  // namespace

GeneralParams::GeneralParams(int k, std::vector<double> probs) : k_(k), probs_(std::move(probs)) {
    check_dimension(k, true);
    if (probs_.size() != lattice_size(k)) {
        throw std::invalid_argument("general parameters need 2^k = " +
                                    std::to_string(lattice_size(k)) + " probabilities, got " +
                                    std::to_string(probs_.size()));
    }
    double total = 0.0;
    for (std::size_t m = 0; m < probs_.size(); ++m) {
        const double v = probs_[m];
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument("probability in slot " + std::to_string(m) +
                                        " is negative or non-finite");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > normalization_tol(probs_.size())) {
        std::ostringstream os;
        os << "probabilities sum to " << format_double(total) << ", not 1";
        throw std::invalid_argument(os.str());
    }
}

double GeneralParams::prob(const Outcome& y) const {
    require_same_dim(k_, y.dim());
    return probs_[y.bits()];
}

bool GeneralParams::strictly_positive() const {
    return std::all_of(probs_.begin(), probs_.end(), [](double v) { return v > 0.0; });
}

NaturalParams::NaturalParams(int k) : k_(k), f_(lattice_size(k), 0.0) {
    check_dimension(k, true);
}

NaturalParams::NaturalParams(int k, std::vector<double> f) : k_(k), f_(std::move(f)) {
    check_dimension(k, true);
    if (f_.size() != lattice_size(k)) {
        throw std::invalid_argument("natural parameters need 2^k = " +
                                    std::to_string(lattice_size(k)) + " slots, got " +
                                    std::to_string(f_.size()));
    }
    if (f_[0] != 0.0) throw std::invalid_argument("natural parameter for the empty set must be 0");
    for (double v : f_) {
        if (!std::isfinite(v)) throw std::invalid_argument("natural parameters must be finite");
    }
}

double NaturalParams::at(const Subset& tau) const {
    require_same_dim(k_, tau.dim());
    return f_[tau.mask()];
}

void NaturalParams::set(const Subset& tau, double value) {
    require_same_dim(k_, tau.dim());
    if (tau.is_empty()) throw std::invalid_argument("cannot set f for the empty set");
    if (!std::isfinite(value)) throw std::invalid_argument("natural parameters must be finite");
    f_[tau.mask()] = value;
}

SFunctionTable s_from_f(const NaturalParams& f) {
    SFunctionTable out{f.dim(), f.values()};
    subset_sum_transform(out.s, f.dim());
    return out;
}

double log_partition(const NaturalParams& f) { return log_sum_exp(s_from_f(f).s); }

NaturalParams general_to_natural(const GeneralParams& p) {
    if (!p.strictly_positive()) {
        throw NumericError("degenerate distribution: natural parameters undefined");
    }
    std::vector<double> f(p.probs().size());
    std::transform(p.probs().begin(), p.probs().end(), f.begin(),
                   [](double v) { return std::log(v); });
    subset_mobius_transform(f, p.dim());
    // The Möbius sum over ∅ alone is log p(0..0); the empty slot is fixed at 0.
    f[0] = 0.0;
    return NaturalParams(p.dim(), std::move(f));
}

GeneralParams natural_to_general(const NaturalParams& f) {
    return GeneralParams(f.dim(), cell_probs(f));
}

double log_density(const NaturalParams& f, const Outcome& y) {
    require_same_dim(f.dim(), y.dim());
    const SFunctionTable s = s_from_f(f);
    return s.s[y.bits()] - log_sum_exp(s.s);
}

GeneralParams marginal(const GeneralParams& p, const Subset& keep) {
    require_same_dim(p.dim(), keep.dim());
    if (keep.is_empty()) throw std::invalid_argument("marginal needs a nonempty set of nodes");
    std::vector<double> out(lattice_size(keep.size()), 0.0);
    for (Mask m = 0; m < p.probs().size(); ++m) {
        out[compress_bits(m, keep.mask())] += p[m];
    }
    return GeneralParams(keep.size(), std::move(out));
}

GeneralParams conditional(const GeneralParams& p, const Subset& target, const Subset& given,
                          const Outcome& given_values) {
    require_same_dim(p.dim(), target.dim());
    require_same_dim(p.dim(), given.dim());
    require_same_dim(p.dim(), given_values.dim());
    if (target.is_empty() || given.is_empty()) {
        throw std::invalid_argument("conditional needs nonempty target and given sets");
    }
    if ((target.mask() & given.mask()) != 0) {
        throw std::invalid_argument("target and given sets overlap");
    }
    if ((given_values.bits() & ~given.mask()) != 0) {
        throw std::invalid_argument("given values set bits outside the given set");
    }
    std::vector<double> out(lattice_size(target.size()), 0.0);
    double total = 0.0;
    for (Mask m = 0; m < p.probs().size(); ++m) {
        if ((m & given.mask()) != given_values.bits()) continue;
        out[compress_bits(m, target.mask())] += p[m];
        total += p[m];
    }
    if (!(total > 0.0)) throw NumericError("conditioning on null event");
    for (double& v : out) v /= total;
    return GeneralParams(target.size(), std::move(out));
}

namespace {

IndependenceReport collect_violations(const NaturalParams& f, double tol, auto&& relevant) {
    if (!(tol >= 0.0)) throw std::invalid_argument("tolerance must be nonnegative");
    IndependenceReport report;
    for (Mask m = 1; m < f.values().size(); ++m) {
        if (relevant(m) && std::abs(f[m]) > tol) {
            report.violations.push_back({Subset(m, f.dim()), f[m]});
        }
    }
    std::stable_sort(report.violations.begin(), report.violations.end(),
                     [](const Violation& a, const Violation& b) {
                         return std::abs(a.value) > std::abs(b.value);
                     });
    report.independent = report.violations.empty();
    return report;
}

}  // namespace

IndependenceReport independence_test_elementwise(const NaturalParams& f, double tol) {
    return collect_violations(f, tol, [](Mask m) { return std::popcount(m) >= 2; });
}

IndependenceReport independence_test_groups(const NaturalParams& f, const Subset& group_a,
                                            const Subset& group_b, double tol) {
    require_same_dim(f.dim(), group_a.dim());
    require_same_dim(f.dim(), group_b.dim());
    if (group_a.is_empty() || group_b.is_empty()) {
        throw std::invalid_argument("independence groups must be nonempty");
    }
    if ((group_a.mask() & group_b.mask()) != 0) {
        throw std::invalid_argument("independence groups overlap");
    }
    const Mask a = group_a.mask();
    const Mask b = group_b.mask();
    const Mask both = a | b;
    if (both == Subset::full(f.dim()).mask()) {
        return collect_violations(f, tol, [a, b](Mask m) { return (m & a) && (m & b); });
    }
    // With nodes left over, zero cross terms in f only give independence
    // conditional on those nodes. Test the cross terms of the marginal over
    // a ∪ b instead, then map subsets back to the original node labels.
    const Subset kept(both, f.dim());
    const NaturalParams fm = general_to_natural(marginal(natural_to_general(f), kept));
    const Mask ca = compress_bits(a, both);
    const Mask cb = compress_bits(b, both);
    IndependenceReport report =
        collect_violations(fm, tol, [ca, cb](Mask m) { return (m & ca) && (m & cb); });
    for (auto& v : report.violations) v.tau = Subset(expand_bits(v.tau.mask(), both), f.dim());
    return report;
}

std::string format_independence_report(const IndependenceReport& report) {
    std::string out;
    for (const auto& v : report.violations) {
        out += to_string(v.tau);
        out += '\t';
        out += format_double(v.value);
        out += '\n';
    }
    return out;
}

double mgf(const NaturalParams& f, std::span<const double> mu) {
    if (mu.size() != static_cast<std::size_t>(f.dim())) {
        throw std::invalid_argument("mgf argument has length " + std::to_string(mu.size()) +
                                    ", expected " + std::to_string(f.dim()));
    }
    std::vector<double> terms = s_from_f(f).s;
    const double b = log_sum_exp(terms);
    std::vector<double> shift(terms.size(), 0.0);
    for (Mask m = 1; m < shift.size(); ++m) {
        shift[m] = shift[m & (m - 1)] + mu[std::countr_zero(m)];
    }
    for (Mask m = 0; m < terms.size(); ++m) terms[m] += shift[m] - b;
    return std::exp(log_sum_exp(terms));
}

std::vector<double> mean_statistics(const NaturalParams& f) {
    std::vector<double> mean = cell_probs(f);
    superset_sum_transform(mean, f.dim());
    return mean;
}

MomentTable moments(const NaturalParams& f) {
    MomentTable out;
    out.k = f.dim();
    out.mean = mean_statistics(f);
    const auto n = static_cast<Eigen::Index>(out.mean.size());
    out.cov = Eigen::MatrixXd::Zero(n, n);
    // E[B^a B^b] = E[B^{a ∪ b}].
    for (Mask a = 1; a < out.mean.size(); ++a) {
        for (Mask b = a; b < out.mean.size(); ++b) {
            const double c = out.mean[a | b] - out.mean[a] * out.mean[b];
            out.cov(a, b) = c;
            out.cov(b, a) = c;
        }
    }
    return out;
}

std::vector<Outcome> sample(const GeneralParams& p, std::size_t n, Generator& gen) {
    std::vector<double> cdf(p.probs().size());
    std::partial_sum(p.probs().begin(), p.probs().end(), cdf.begin());
    const double total = cdf.back();
    // Last slot that carries mass; guards u * total rounding onto the top edge.
    Mask last = 0;
    for (Mask m = 0; m < cdf.size(); ++m) {
        if (p[m] > 0.0) last = m;
    }
    std::vector<Outcome> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = gen.uniform() * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        Mask m = it == cdf.end() ? last : static_cast<Mask>(it - cdf.begin());
        out.emplace_back(std::min(m, last), p.dim());
    }
    return out;
}

std::vector<Outcome> sample(const GeneralParams& p, std::size_t n, std::uint64_t seed) {
    Generator gen(seed);
    return sample(p, n, gen);
}

}  // namespace mvb
