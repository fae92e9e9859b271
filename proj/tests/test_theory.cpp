#include <catch2/catch_amalgamated.hpp>

#include "rankstab/theory.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace rankstab;

namespace {

PerformanceModel plain_model(std::vector<double> mu, double sigma) {
    PerformanceModel m;
    m.mu = std::move(mu);
    m.sigma = sigma;
    return m;
}

// k = 3 model with one latent dimension: rivals of the best pipeline have
// nu = sigma*sqrt(2) (shared bias) and nu = 5*sigma*sqrt(2) (opposed bias).
PerformanceModel worked_pair_model() {
    PerformanceModel m;
    m.mu = {0.0, -0.05, -0.20};
    m.sigma = 1.0;
    Matrix beta(3, 1);
    beta(0, 0) = 0.0;
    beta(1, 0) = 0.0;
    beta(2, 0) = 1.0;
    Matrix cov(1, 1);
    cov(0, 0) = 48.0;  // gamma^T cov gamma + 2 = 50 = (5 sqrt2)^2
    m.bias = beta;
    m.sigma_z = cov;
    return m;
}

} // namespace

TEST_CASE("expected_sign") {
    CHECK(expected_sign(0.0, 1.0, 10) == 0.0);
    // Delta = 2 sigma / sqrt(N) makes the argument exactly 1
    const double v = expected_sign(2.0 / 4.0, 1.0, 16);
    CHECK(v == Catch::Approx(oracles::erf_quadrature(1.0)).margin(1e-4));
    CHECK(expected_sign(-0.5, 1.0, 16) == Catch::Approx(-v));
    CHECK_THROWS_AS(expected_sign(1.0, 0.0, 4), validation_error);
    CHECK_THROWS_AS(expected_sign(1.0, 1.0, 0), validation_error);
}

TEST_CASE("effective_variance") {
    Matrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    CHECK(effective_variance({0.0, 0.0}, eye, 1.5) == Catch::Approx(2.0 * 1.5 * 1.5));
    CHECK(effective_variance({3.0, 4.0}, eye, 1e-9) == Catch::Approx(25.0));

    Matrix indefinite(1, 1);
    indefinite(0, 0) = -1.0;
    CHECK_THROWS_AS(effective_variance({1.0}, indefinite, 1.0), numeric_error);
}

TEST_CASE("gap_summary minima, counts, margins") {
    const GapSummary two = gap_summary(plain_model({0.0, 1.0}, 1.0));
    CHECK(two.delta_min == 1.0);
    CHECK(two.delta_1 == 1.0);
    CHECK(two.m_min_delta == 1);

    const GapSummary three = gap_summary(plain_model({0.0, 0.5, 1.0}, 1.0));
    CHECK(three.delta_min == 0.5);
    CHECK(three.m_min_delta == 2);
    CHECK(three.delta_1 == 0.5);
    CHECK(three.best_index == 2);

    const GapSummary tied = gap_summary(plain_model({1.0, 1.0, 0.0}, 1.0));
    CHECK(tied.degenerate_top);
    CHECK(tied.delta_1 == 0.0);
}

TEST_CASE("gap_summary worked pair: rho_1 attained by the distant rival") {
    const GapSummary g = gap_summary(worked_pair_model());
    const double sqrt2 = kSqrt2;
    // pairs flattened: (0,1), (0,2), (1,2)
    CHECK(g.nus[0] == Catch::Approx(sqrt2));
    CHECK(g.nus[1] == Catch::Approx(5.0 * sqrt2));
    CHECK(g.rhos[0] == Catch::Approx(0.05 / sqrt2));
    CHECK(g.rhos[1] == Catch::Approx(0.04 / sqrt2));  // 0.20 / (5 sqrt2)
    CHECK(g.rho_1 == Catch::Approx(0.04 / sqrt2));    // the weaker rival is harder to beat
}

TEST_CASE("expected_tau formulas at the unit argument") {
    // k = 2, |Delta| sqrt(N) / (2 sigma) = 1
    const GapSummary g = gap_summary(plain_model({0.0, 0.5}, 1.0));
    const double e1 = oracles::erf_quadrature(1.0);
    CHECK(expected_tau_two_benchmarks(g, 16) == Catch::Approx(e1 * e1).margin(1e-12));
    CHECK(expected_tau_two_benchmarks(g, 16) == Catch::Approx(0.710145).margin(1e-5));
    CHECK(expected_tau_oracle(g, 16) == Catch::Approx(e1).margin(1e-12));
    CHECK(expected_tau_oracle(g, 16) == Catch::Approx(0.842700).margin(1e-5));
}

TEST_CASE("expected_tau edge behavior") {
    const GapSummary zero = gap_summary(plain_model({1.0, 1.0, 1.0}, 1.0));
    CHECK(expected_tau_two_benchmarks(zero, 50) == 0.0);
    CHECK(expected_tau_oracle(zero, 50) == 0.0);

    const GapSummary sharp = gap_summary(plain_model({0.0, 1.0}, 1e-9));
    CHECK(expected_tau_two_benchmarks(sharp, 4) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("oracle agreement dominates two-benchmark agreement") {
    std::mt19937 gen(31);
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t k = 2 + gen() % 5;
        std::vector<double> mu(k);
        for (double& v : mu) v = unif(gen);
        const GapSummary g = gap_summary(plain_model(mu, 0.3 + unif(gen)));
        for (std::int64_t n : {1, 4, 32, 256}) {
            const double two = expected_tau_two_benchmarks(g, n);
            const double one = expected_tau_oracle(g, n);
            CHECK(one >= two - 1e-15);
            CHECK(two >= 0.0);
            CHECK(one <= 1.0);
        }
    }
}

TEST_CASE("asymptotic_disagreement closed form, hand-evaluated") {
    // k = 2, M_min = 1, sigma = 1, Delta_min = 1, N = 16:
    //   C = 8*1*1 / (2 * 1 * sqrt(pi)) = 4/sqrt(pi)
    //   value = (C/4) exp(-4) = exp(-4)/sqrt(pi)
    const GapSummary g = gap_summary(plain_model({0.0, 1.0}, 1.0));
    const double expected = std::exp(-4.0) / std::sqrt(M_PI);
    CHECK(asymptotic_disagreement(g, 16, AgreementTarget::two_benchmarks) ==
          Catch::Approx(expected).epsilon(1e-12));
    CHECK(asymptotic_disagreement(g, 16, AgreementTarget::two_benchmarks) ==
          Catch::Approx(0.0103334927).margin(1e-9));
}

TEST_CASE("factor-two law and exponent doubling") {
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> unif(0.1, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> mu{0.0, unif(gen), 2.0 + unif(gen)};
        const GapSummary g = gap_summary(plain_model(mu, unif(gen)));
        for (std::int64_t n : {2, 8, 64}) {
            const double two = asymptotic_disagreement(g, n, AgreementTarget::two_benchmarks);
            const double one = asymptotic_disagreement(g, n, AgreementTarget::oracle);
            CHECK(one == 0.5 * two);  // exact halving

            // doubling N at least squares the exponential factor
            const double ratio = asymptotic_disagreement(g, 2 * n, AgreementTarget::two_benchmarks) / two;
            const double decay = std::exp(-g.delta_min * g.delta_min * static_cast<double>(n) /
                                          (4.0 * g.sigma * g.sigma));
            CHECK(ratio <= decay + 1e-15);
        }
    }
    CHECK_THROWS_AS(asymptotic_disagreement(gap_summary(plain_model({1.0, 1.0}, 1.0)), 4,
                                            AgreementTarget::two_benchmarks),
                    numeric_error);
}

TEST_CASE("asymptotic consistency: exact and asymptotic agree once exponents dominate") {
    const GapSummary g = gap_summary(plain_model({0.0, 1.0, 2.0}, 1.0));
    // exponent = Delta_min^2 N / (4 sigma^2) = N/4 >= 20
    const std::int64_t n = 80;
    const double exact = 1.0 - expected_tau_two_benchmarks(g, n);
    const double asym = asymptotic_disagreement(g, n, AgreementTarget::two_benchmarks);
    CHECK(exact / asym == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("inductive mode with gamma = 0 reproduces homoskedastic mode") {
    PerformanceModel biased = plain_model({0.0, 0.4, 1.1, 1.9}, 0.8);
    Matrix beta(4, 2);  // all-zero sensitivities
    Matrix cov(2, 2);
    cov(0, 0) = 2.0;
    cov(1, 1) = 1.0;
    cov(0, 1) = cov(1, 0) = 0.5;
    biased.bias = beta;
    biased.sigma_z = cov;
    const GapSummary g = gap_summary(biased);

    for (std::int64_t n : {1, 3, 10, 64, 300}) {
        CHECK(expected_tau_two_benchmarks(g, n, NoiseMode::inductive) ==
              Catch::Approx(expected_tau_two_benchmarks(g, n, NoiseMode::homoskedastic))
                  .margin(1e-12));
        CHECK(expected_tau_oracle(g, n, NoiseMode::inductive) ==
              Catch::Approx(expected_tau_oracle(g, n, NoiseMode::homoskedastic)).margin(1e-12));
        CHECK(asymptotic_disagreement(g, n, AgreementTarget::two_benchmarks, NoiseMode::inductive) ==
              Catch::Approx(asymptotic_disagreement(g, n, AgreementTarget::two_benchmarks,
                                                    NoiseMode::homoskedastic))
                  .margin(1e-12));
        CHECK(position1_bound(g, n, NoiseMode::inductive) ==
              Catch::Approx(position1_bound(g, n, NoiseMode::homoskedastic)).margin(1e-12));
    }
}

TEST_CASE("position1_bound") {
    // k = 3, Delta_1 sqrt(N)/(sigma sqrt2) = 1 at Delta_1 = sqrt2, sigma = 1, N = 1
    const GapSummary g = gap_summary(plain_model({kSqrt2, 0.0, -3.0}, 1.0));
    CHECK(position1_bound(g, 1) ==
          Catch::Approx(4.0 * oracles::normal_cdf_quadrature(-1.0)).margin(1e-10));
    CHECK(position1_bound(g, 1) == Catch::Approx(0.634621).margin(1e-6));

    // tiny margin at small N: raw union bound exceeds 1 and clamps
    const GapSummary tight = gap_summary(plain_model({0.001, 0.0, -1.0}, 1.0));
    CHECK(position1_bound(tight, 1) == 1.0);

    // huge margin: bound goes to 0
    const GapSummary wide = gap_summary(plain_model({100.0, 0.0}, 1.0));
    CHECK(position1_bound(wide, 16) == Catch::Approx(0.0).margin(1e-300));

    CHECK_THROWS_AS(position1_bound(gap_summary(plain_model({1.0, 1.0}, 1.0)), 4),
                    numeric_error);
}

TEST_CASE("required_benchmark_size brackets the asymptotic law") {
    const GapSummary g = gap_summary(plain_model({0.0, 1.0}, 1.0));
    const std::int64_t n = required_benchmark_size(g, 0.01, SizeCriterion::kendall);
    CHECK(asymptotic_disagreement(g, n, AgreementTarget::two_benchmarks) <= 0.01);
    REQUIRE(n > 1);
    CHECK(asymptotic_disagreement(g, n - 1, AgreementTarget::two_benchmarks) > 0.01);

    const std::int64_t n_exact = required_benchmark_size_exact(g, 0.01, SizeCriterion::kendall);
    CHECK(1.0 - expected_tau_two_benchmarks(g, n_exact) <= 0.01);
    CHECK(1.0 - expected_tau_two_benchmarks(g, n_exact - 1) > 0.01);
}

TEST_CASE("required size ratio follows the square law") {
    // Delta_1 = Delta_min: both criteria ask for comparable N (leading order ratio 1)
    const GapSummary even = gap_summary(plain_model({0.0, 0.5}, 1.0));
    CHECK(leading_order_size_ratio(even) == Catch::Approx(1.0));

    // Delta_1 = 2 Delta_min -> ratio 1/4
    const GapSummary skewed = gap_summary(plain_model({0.0, 0.5, 1.5}, 1.0));
    CHECK(skewed.delta_min == Catch::Approx(0.5));
    CHECK(skewed.delta_1 == Catch::Approx(1.0));
    CHECK(leading_order_size_ratio(skewed) == Catch::Approx(0.25));

    // tiny epsilon: the searched ratio approaches the leading-order law
    const double eps = 1e-60;
    const double np = static_cast<double>(required_benchmark_size(skewed, eps, SizeCriterion::position1));
    const double nk = static_cast<double>(required_benchmark_size(skewed, eps, SizeCriterion::kendall));
    CHECK(np / nk == Catch::Approx(0.25).epsilon(0.05));
}

TEST_CASE("probabilities and correlations stay in range on random models") {
    std::mt19937 gen(41);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t k = 2 + gen() % 5;
        std::vector<double> mu(k);
        for (double& v : mu) v = 3.0 * unif(gen);
        PerformanceModel m = plain_model(mu, 0.2 + 2.0 * unif(gen));
        if (trial % 2 == 0) {
            Matrix beta(k, 1);
            for (std::size_t i = 0; i < k; ++i) beta(i, 0) = unif(gen) - 0.5;
            Matrix cov(1, 1);
            cov(0, 0) = 0.5 + unif(gen);
            m.bias = beta;
            m.sigma_z = cov;
        }
        const GapSummary g = gap_summary(m);
        const NoiseMode mode = m.bias ? NoiseMode::inductive : NoiseMode::homoskedastic;
        for (std::int64_t n : {1, 7, 50}) {
            const double t2 = expected_tau_two_benchmarks(g, n, mode);
            const double t1 = expected_tau_oracle(g, n, mode);
            CHECK((t2 >= 0.0 && t2 <= 1.0));
            CHECK((t1 >= 0.0 && t1 <= 1.0));
            if (!g.degenerate_top) {
                const double b = position1_bound(g, n, mode);
                CHECK((b >= 0.0 && b <= 1.0));
            }
        }
    }
}
