#include <doctest.h>

#include <cmath>

#include "mvb/ising.hpp"
#include "oracles.hpp"

using namespace mvb;
using doctest::Approx;

namespace {

Eigen::MatrixXd random_theta(oracle::Rng& rng, int k) {
    Eigen::MatrixXd t(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) t(i, j) = t(j, i) = rng.uniform(-2.0, 2.0);
    }
    return t;
}

// Direct double sum over configurations.
double brute_log_partition(const Eigen::MatrixXd& t) {
    const int k = static_cast<int>(t.rows());
    double z = 0.0;
    for (oracle::Mask y = 0; y < (oracle::Mask{1} << k); ++y) {
        double e = 0.0;
        for (int j = 0; j < k; ++j) {
            e += t(j, j) * oracle::bit(y, j);
            for (int m = j + 1; m < k; ++m) e += t(j, m) * oracle::bit(y, j) * oracle::bit(y, m);
        }
        z += std::exp(e);
    }
    return std::log(z);
}

NaturalParams random_pairwise_f(oracle::Rng& rng, int k) {
    auto f = oracle::random_f(rng, k);
    for (std::size_t m = 1; m < f.size(); ++m) {
        if (std::popcount(static_cast<unsigned>(m)) >= 3) f[m] = 0.0;
    }
    return NaturalParams(k, f);
}

}  // namespace

TEST_CASE("Ising parameters") {
    CHECK(IsingParams(3).theta().isZero());
    Eigen::MatrixXd asym(2, 2);
    asym << 0, 1, 2, 0;
    CHECK_THROWS_AS(IsingParams{asym}, std::invalid_argument);
    CHECK_THROWS_AS(IsingParams(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 0) = NAN;
    CHECK_THROWS_AS(IsingParams{bad}, std::invalid_argument);
    // indefinite matrices are allowed
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1, 3, 3, 1;
    CHECK_NOTHROW(IsingParams{indefinite});
    IsingParams p(2);
    p.set(0, 1, 0.5);
    CHECK(p.theta()(1, 0) == 0.5);
    CHECK_THROWS_AS(p.set(2, 0, 1.0), std::invalid_argument);
}

TEST_CASE("Ising log partition") {
    CHECK(ising_log_partition(IsingParams(1)) == Approx(std::log(2.0)).epsilon(1e-15));
    for (int k = 1; k <= 6; ++k) {
        CHECK(ising_log_partition(IsingParams(k)) == Approx(k * std::log(2.0)).epsilon(1e-14));
    }
    oracle::Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = random_theta(rng, 3);
        CHECK(std::abs(ising_log_partition(IsingParams(t)) - brute_log_partition(t)) <= 1e-12);
    }
    // large parameters stay finite
    Eigen::MatrixXd big = Eigen::MatrixXd::Constant(3, 3, 400.0);
    CHECK(std::isfinite(ising_log_partition(IsingParams(big))));
}

TEST_CASE("Ising log density") {
    for (int k = 1; k <= 4; ++k) {
        for (Mask y = 0; y < (Mask{1} << k); ++y) {
            CHECK(std::exp(ising_log_density(IsingParams(k), Outcome(y, k))) ==
                  Approx(std::pow(2.0, -k)).epsilon(1e-14));
        }
    }
    oracle::Rng rng(6);
    for (int k = 1; k <= 4; ++k) {
        const IsingParams theta(random_theta(rng, k));
        double total = 0.0;
        for (Mask y = 0; y < (Mask{1} << k); ++y) {
            total += std::exp(ising_log_density(theta, Outcome(y, k)));
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    CHECK_THROWS_AS(ising_log_density(IsingParams(2), Outcome(0, 3)), std::invalid_argument);
}

TEST_CASE("pairwise embedding matches the multivariate Bernoulli density") {
    oracle::Rng rng(7);
    for (int k = 1; k <= 4; ++k) {
        for (int trial = 0; trial < 25; ++trial) {
            const NaturalParams f = random_pairwise_f(rng, k);
            const IsingParams theta = mvb_to_ising(f);
            for (Mask y = 0; y < (Mask{1} << k); ++y) {
                CHECK(std::abs(ising_log_density(theta, Outcome(y, k)) -
                               log_density(f, Outcome(y, k))) <= 1e-12);
            }
            CHECK(std::abs(ising_log_partition(theta) - log_partition(f)) <= 1e-12);
            const NaturalParams back = ising_to_mvb(theta);
            CHECK(back.values() == f.values());
        }
    }
    // k=2 explicit layout
    NaturalParams f(2, {0.0, 0.3, -0.4, 1.1});
    const auto t = mvb_to_ising(f).theta();
    CHECK(t(0, 0) == 0.3);
    CHECK(t(1, 1) == -0.4);
    CHECK(t(0, 1) == 1.1);
    CHECK(t(1, 0) == 1.1);
    CHECK(mvb_to_ising(NaturalParams(3)).theta().isZero());
}

TEST_CASE("higher-order parameters are not pairwise-representable") {
    NaturalParams f(3);
    f.set(Subset::of({1, 2, 3}, 3), 0.1);
    CHECK_THROWS_AS(mvb_to_ising(f), std::invalid_argument);
    try {
        mvb_to_ising(f);
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("not pairwise-representable") != std::string::npos);
    }
    f.set(Subset::of({1, 2, 3}, 3), 1e-13);
    CHECK_NOTHROW(mvb_to_ising(f));
}

TEST_CASE("parameter counts") {
    const auto c1 = parameter_counts(1);
    CHECK(c1.mvb == 1);
    CHECK(c1.ising == 1);
    CHECK(c1.gaussian == 2);
    const auto c2 = parameter_counts(2);
    CHECK(c2.mvb == 3);
    CHECK(c2.ising == 3);
    CHECK(c2.gaussian == 5);
    const auto c3 = parameter_counts(3);
    CHECK(c3.mvb == 7);
    CHECK(c3.ising == 6);
    CHECK(c3.gaussian == 9);
    for (int k = 1; k <= 10; ++k) {
        const auto c = parameter_counts(k);
        std::uint64_t pow2 = 1;
        for (int i = 0; i < k; ++i) pow2 *= 2;
        CHECK(c.mvb == pow2 - 1);
        CHECK(c.ising == static_cast<std::uint64_t>(k * (k + 1) / 2));
        CHECK(c.gaussian == static_cast<std::uint64_t>(k + k * (k + 1) / 2));
    }
    CHECK_THROWS_AS(parameter_counts(0), std::invalid_argument);
}
