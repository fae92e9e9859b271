#pragma once

// Closed-form expectations and bounds for ranking agreement between finite
// benchmarks and the oracle ranking, under the Gaussian performance model
//
//   X_{i,d} = mu_i + epsilon_{i,d}                    (homoskedastic)
//   X_{i,d} = mu_i + beta_i' z_d + epsilon_{i,d}      (inductive-bias)
//
// with epsilon ~ N(0, sigma^2) i.i.d. and z_d ~ N(0, Sigma_z). The expected
// Kendall-tau between two size-N benchmarks is an average of erf^2 terms,
// agreement with the oracle an average of erf terms, and both disagreements
// decay as (C/sqrt(N)) exp(-rate * N) governed by the smallest pairwise gap
// (or, with inductive bias, the smallest signal-to-noise ratio).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "rankstab/errors.hpp"
#include "rankstab/linalg.hpp"
#include "rankstab/special_functions.hpp"

namespace rankstab {

enum class NoiseMode { homoskedastic, inductive };
enum class AgreementTarget { two_benchmarks, oracle };
enum class SizeCriterion { position1, kendall };

struct PerformanceModel {
    std::vector<double> mu;          // intrinsic mean performance per pipeline
    double sigma = 1.0;              // noise standard deviation, > 0
    std::optional<Matrix> bias;      // k x p sensitivity vectors beta_i
    std::optional<Matrix> sigma_z;   // p x p covariance of latent meta-features

    std::size_t n_pipelines() const { return mu.size(); }

    void validate() const {
        if (mu.size() < 2) throw validation_error("PerformanceModel: needs k >= 2 pipelines");
        for (double m : mu)
            if (!std::isfinite(m)) throw validation_error("PerformanceModel: non-finite mu");
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw validation_error("PerformanceModel: sigma must be positive and finite");
        if (bias.has_value() != sigma_z.has_value())
            throw validation_error("PerformanceModel: bias and sigma_z must be given together");
        if (bias) {
            if (bias->rows != mu.size())
                throw validation_error("PerformanceModel: bias must have one row per pipeline");
            if (sigma_z->rows != sigma_z->cols || sigma_z->rows != bias->cols)
                throw validation_error("PerformanceModel: sigma_z must be p x p with p = bias columns");
            if (!sigma_z->symmetric(1e-9))
                throw validation_error("PerformanceModel: sigma_z must be symmetric");
        }
    }
};

// Effective pairwise variance nu^2 = gamma' Sigma_z gamma + 2 sigma^2.
// Small negative quadratic forms from round-off clamp to zero; a clearly
// negative one means Sigma_z was not PSD.
inline double effective_variance(const std::vector<double>& gamma, const Matrix& sigma_z,
                                 double sigma) {
    if (!(sigma > 0.0)) throw validation_error("effective_variance: sigma must be positive");
    double q = quadratic_form(sigma_z, gamma);
    double g2 = 0.0;
    for (double g : gamma) g2 += g * g;
    const double scale = std::max(1.0, std::fabs(sigma_z.trace()) * g2);
    if (q < -1e-12 * scale)
        throw numeric_error("effective_variance: negative quadratic form; sigma_z is not PSD");
    if (q < 0.0) q = 0.0;
    return q + 2.0 * sigma * sigma;
}

// Per-pair gap structure of a model: |Delta_ij|, effective std nu_ij, and
// SNR rho_ij = |Delta_ij| / nu_ij over all pairs i < j, plus the minima the
// asymptotic laws depend on and the best-vs-rivals margins Delta_1 / rho_1.
struct GapSummary {
    std::size_t k = 0;
    double sigma = 0.0;
    std::vector<double> deltas;  // |Delta_ij|, pairs flattened i<j
    std::vector<double> nus;     // nu_ij > 0
    std::vector<double> rhos;    // |Delta_ij| / nu_ij

    double delta_min = 0.0;
    double rho_min = 0.0;
    std::size_t m_min_delta = 0;  // pairs attaining delta_min within tolerance
    std::size_t m_min_rho = 0;    // pairs attaining rho_min within tolerance

    std::size_t best_index = 0;   // argmax mu
    bool degenerate_top = false;  // tied global maximum (Delta_1 = 0)
    double delta_1 = 0.0;         // margin best vs second best
    double rho_1 = 0.0;           // min SNR over rivals of the best

    std::uint64_t pair_count() const { return static_cast<std::uint64_t>(k) * (k - 1) / 2; }
};

namespace detail {

// A pair attains the minimum if its value <= (1 + 1e-9) * min, so equal
// gaps that differ only in round-off still count.
inline std::size_t count_minima(const std::vector<double>& v, double vmin) {
    std::size_t c = 0;
    for (double x : v)
        if (x <= vmin * (1.0 + 1e-9)) ++c;
    return c;
}

} // namespace detail

inline GapSummary gap_summary(const PerformanceModel& model) {
    model.validate();
    const std::size_t k = model.mu.size();
    GapSummary g;
    g.k = k;
    g.sigma = model.sigma;
    g.deltas.reserve(k * (k - 1) / 2);
    g.nus.reserve(k * (k - 1) / 2);
    g.rhos.reserve(k * (k - 1) / 2);

    const double nu_plain = model.sigma * kSqrt2;
    std::vector<double> gamma;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double delta = std::fabs(model.mu[i] - model.mu[j]);
            double nu = nu_plain;
            if (model.bias) {
                gamma.assign(model.bias->cols, 0.0);
                for (std::size_t c = 0; c < model.bias->cols; ++c)
                    gamma[c] = (*model.bias)(i, c) - (*model.bias)(j, c);
                nu = std::sqrt(effective_variance(gamma, *model.sigma_z, model.sigma));
            }
            g.deltas.push_back(delta);
            g.nus.push_back(nu);
            g.rhos.push_back(delta / nu);
        }
    }

    g.delta_min = *std::min_element(g.deltas.begin(), g.deltas.end());
    g.rho_min = *std::min_element(g.rhos.begin(), g.rhos.end());
    g.m_min_delta = detail::count_minima(g.deltas, g.delta_min);
    g.m_min_rho = detail::count_minima(g.rhos, g.rho_min);

    g.best_index = static_cast<std::size_t>(
        std::max_element(model.mu.begin(), model.mu.end()) - model.mu.begin());
    g.delta_1 = std::numeric_limits<double>::infinity();
    g.rho_1 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        if (j == g.best_index) continue;
        const std::size_t lo = std::min(g.best_index, j);
        const std::size_t hi = std::max(g.best_index, j);
        // flattened index of pair (lo, hi)
        const std::size_t idx = lo * k - lo * (lo + 1) / 2 + (hi - lo - 1);
        g.delta_1 = std::min(g.delta_1, g.deltas[idx]);
        g.rho_1 = std::min(g.rho_1, g.rhos[idx]);
    }
    if (g.delta_1 == 0.0) {
        g.degenerate_top = true;
        g.rho_1 = 0.0;
    }
    return g;
}

// E[sgn(Y_ij)] = sgn(Delta) * erf(|Delta| sqrt(N) / (2 sigma)).
inline double expected_sign(double delta, double sigma, std::int64_t n) {
    if (!(sigma > 0.0)) throw validation_error("expected_sign: sigma must be positive");
    if (n < 1) throw validation_error("expected_sign: n must be >= 1");
    if (!std::isfinite(delta)) throw validation_error("expected_sign: non-finite delta");
    if (delta == 0.0) return 0.0;
    const double mag = erf(std::fabs(delta) * std::sqrt(static_cast<double>(n)) / (2.0 * sigma));
    return delta > 0 ? mag : -mag;
}

namespace detail {

// erf argument of pair p at benchmark size n; identical in both modes when
// nu = sigma * sqrt(2).
inline double pair_argument(const GapSummary& g, std::size_t p, std::int64_t n, NoiseMode mode) {
    const double root_n = std::sqrt(static_cast<double>(n));
    if (mode == NoiseMode::homoskedastic)
        return g.deltas[p] * root_n / (2.0 * g.sigma);
    return std::sqrt(static_cast<double>(n) / 2.0) * g.rhos[p];
}

inline void check_gaps(const GapSummary& g, NoiseMode mode, const char* who) {
    if (g.k < 2) throw validation_error(std::string(who) + ": gap summary has k < 2");
    if (g.deltas.size() != g.pair_count())
        throw validation_error(std::string(who) + ": pair vectors do not match k");
    if (mode == NoiseMode::homoskedastic && !(g.sigma > 0.0))
        throw validation_error(std::string(who) + ": homoskedastic mode needs sigma > 0");
    if (mode == NoiseMode::inductive && g.rhos.size() != g.pair_count())
        throw validation_error(std::string(who) + ": inductive mode needs populated nus/rhos");
}

} // namespace detail

// E[tau_{N,N}] = (2 / k(k-1)) sum erf^2(arg_ij): agreement between two
// independent benchmarks of size N.
inline double expected_tau_two_benchmarks(const GapSummary& g, std::int64_t n,
                                          NoiseMode mode = NoiseMode::homoskedastic) {
    detail::check_gaps(g, mode, "expected_tau_two_benchmarks");
    if (n < 1) throw validation_error("expected_tau_two_benchmarks: n must be >= 1");
    double sum = 0.0;
    for (std::size_t p = 0; p < g.deltas.size(); ++p) {
        const double e = erf(detail::pair_argument(g, p, n, mode));
        sum += e * e;
    }
    return sum / static_cast<double>(g.pair_count());
}

// E[tau_{N,inf}]: same with erf in place of erf^2 (agreement with the
// oracle ranking induced by mu).
inline double expected_tau_oracle(const GapSummary& g, std::int64_t n,
                                  NoiseMode mode = NoiseMode::homoskedastic) {
    detail::check_gaps(g, mode, "expected_tau_oracle");
    if (n < 1) throw validation_error("expected_tau_oracle: n must be >= 1");
    double sum = 0.0;
    for (std::size_t p = 0; p < g.deltas.size(); ++p)
        sum += erf(detail::pair_argument(g, p, n, mode));
    return sum / static_cast<double>(g.pair_count());
}

// Leading-order disagreement law:
//   two benchmarks:  (C / sqrt(N)) exp(-Delta_min^2 N / (4 sigma^2)),
//                    C = 8 sigma M_min / (k(k-1) Delta_min sqrt(pi));
//   oracle:          exactly half of that.
// Inductive mode replaces the pair constants by
//   C~ = 4 sqrt(2) M_min / (k(k-1) rho_min sqrt(pi)),  rate rho_min^2 / 2.
inline double asymptotic_disagreement(const GapSummary& g, std::int64_t n,
                                      AgreementTarget target,
                                      NoiseMode mode = NoiseMode::homoskedastic) {
    detail::check_gaps(g, mode, "asymptotic_disagreement");
    if (n < 1) throw validation_error("asymptotic_disagreement: n must be >= 1");
    const double kk1 = static_cast<double>(g.k) * (g.k - 1);
    double c, rate;
    if (mode == NoiseMode::homoskedastic) {
        if (!(g.delta_min > 0.0))
            throw numeric_error("asymptotic_disagreement: law undefined at delta_min = 0");
        c = 8.0 * g.sigma * static_cast<double>(g.m_min_delta) / (kk1 * g.delta_min * kSqrtPi);
        rate = g.delta_min * g.delta_min / (4.0 * g.sigma * g.sigma);
    } else {
        if (!(g.rho_min > 0.0))
            throw numeric_error("asymptotic_disagreement: law undefined at rho_min = 0");
        c = 4.0 * kSqrt2 * static_cast<double>(g.m_min_rho) / (kk1 * g.rho_min * kSqrtPi);
        rate = g.rho_min * g.rho_min / 2.0;
    }
    const double value = c / std::sqrt(static_cast<double>(n)) *
                         std::exp(-rate * static_cast<double>(n));
    return target == AgreementTarget::oracle ? 0.5 * value : value;
}

// Union bound on the probability that two independent size-N benchmarks
// disagree on the top-ranked pipeline: min(1, 2(k-1) Phi(-arg)).
inline double position1_bound(const GapSummary& g, std::int64_t n,
                              NoiseMode mode = NoiseMode::homoskedastic) {
    detail::check_gaps(g, mode, "position1_bound");
    if (n < 1) throw validation_error("position1_bound: n must be >= 1");
    const double margin = mode == NoiseMode::homoskedastic ? g.delta_1 : g.rho_1;
    if (g.degenerate_top || !(margin > 0.0))
        throw numeric_error("position1_bound: tied best pipeline (Delta_1 = 0)");
    const double root_n = std::sqrt(static_cast<double>(n));
    const double arg = mode == NoiseMode::homoskedastic
                           ? g.delta_1 * root_n / (g.sigma * kSqrt2)
                           : g.rho_1 * root_n;
    return std::min(1.0, 2.0 * static_cast<double>(g.k - 1) * std_normal_cdf(-arg));
}

namespace detail {

// Asymptotic bound (A / sqrt(N)) exp(-rate N) for the requested criterion.
struct DecayLaw {
    double amplitude;
    double rate;
    double operator()(std::int64_t n) const {
        return amplitude / std::sqrt(static_cast<double>(n)) *
               std::exp(-rate * static_cast<double>(n));
    }
};

inline DecayLaw decay_law(const GapSummary& g, SizeCriterion criterion, NoiseMode mode) {
    const double kk1 = static_cast<double>(g.k) * (g.k - 1);
    if (criterion == SizeCriterion::kendall) {
        if (mode == NoiseMode::homoskedastic) {
            if (!(g.delta_min > 0.0))
                throw numeric_error("required_benchmark_size: delta_min = 0");
            return {8.0 * g.sigma * static_cast<double>(g.m_min_delta) /
                        (kk1 * g.delta_min * kSqrtPi),
                    g.delta_min * g.delta_min / (4.0 * g.sigma * g.sigma)};
        }
        if (!(g.rho_min > 0.0)) throw numeric_error("required_benchmark_size: rho_min = 0");
        return {4.0 * kSqrt2 * static_cast<double>(g.m_min_rho) / (kk1 * g.rho_min * kSqrtPi),
                g.rho_min * g.rho_min / 2.0};
    }
    // position-1 criterion: Gaussian tail bound on the union bound
    if (mode == NoiseMode::homoskedastic) {
        if (g.degenerate_top || !(g.delta_1 > 0.0))
            throw numeric_error("required_benchmark_size: delta_1 = 0");
        return {2.0 * static_cast<double>(g.k - 1) * g.sigma / (g.delta_1 * kSqrtPi),
                g.delta_1 * g.delta_1 / (4.0 * g.sigma * g.sigma)};
    }
    if (g.degenerate_top || !(g.rho_1 > 0.0))
        throw numeric_error("required_benchmark_size: rho_1 = 0");
    return {2.0 * static_cast<double>(g.k - 1) / (g.rho_1 * kSqrt2 * kSqrtPi),
            g.rho_1 * g.rho_1 / 2.0};
}

template <typename Fn>
inline std::int64_t smallest_n_below(Fn&& bound, double epsilon) {
    if (bound(1) <= epsilon) return 1;
    std::int64_t hi = 1;
    while (bound(hi) > epsilon) {
        if (hi > (std::int64_t{1} << 60))
            throw numeric_error("required_benchmark_size: threshold unreachable");
        hi *= 2;
    }
    std::int64_t lo = hi / 2;  // bound(lo) > eps, bound(hi) <= eps
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        (bound(mid) <= epsilon ? hi : lo) = mid;
    }
    return hi;
}

} // namespace detail

// Smallest integer N with the asymptotic bound <= epsilon, by monotone
// search on the decay law the paper's derivation solves.
inline std::int64_t required_benchmark_size(const GapSummary& g, double epsilon,
                                            SizeCriterion criterion,
                                            NoiseMode mode = NoiseMode::homoskedastic) {
    detail::check_gaps(g, mode, "required_benchmark_size");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw validation_error("required_benchmark_size: epsilon must lie in (0,1)");
    const detail::DecayLaw law = detail::decay_law(g, criterion, mode);
    return detail::smallest_n_below(law, epsilon);
}

// Cross-check variant on the exact formulas (full erf sum / clamped Phi
// bound) instead of the asymptotic law. The erf sum saturates at double
// precision near 1 - tau ~ 1e-16, so epsilon below ~1e-12 is rejected.
inline std::int64_t required_benchmark_size_exact(const GapSummary& g, double epsilon,
                                                  SizeCriterion criterion,
                                                  NoiseMode mode = NoiseMode::homoskedastic) {
    detail::check_gaps(g, mode, "required_benchmark_size");
    if (!(epsilon >= 1e-12 && epsilon < 1.0))
        throw validation_error("required_benchmark_size_exact: epsilon must lie in [1e-12, 1)");
    if (criterion == SizeCriterion::kendall) {
        const auto bound = [&](std::int64_t n) {
            return 1.0 - expected_tau_two_benchmarks(g, n, mode);
        };
        return detail::smallest_n_below(bound, epsilon);
    }
    const auto bound = [&](std::int64_t n) { return position1_bound(g, n, mode); };
    return detail::smallest_n_below(bound, epsilon);
}

// Leading-exponent ratio N*_pos1 / N*_kendall: (delta_min / delta_1)^2 in
// homoskedastic mode, (rho_min / rho_1)^2 with inductive bias.
inline double leading_order_size_ratio(const GapSummary& g,
                                       NoiseMode mode = NoiseMode::homoskedastic) {
    if (g.degenerate_top)
        throw numeric_error("leading_order_size_ratio: tied best pipeline");
    if (mode == NoiseMode::homoskedastic) {
        if (!(g.delta_min > 0.0) || !(g.delta_1 > 0.0))
            throw numeric_error("leading_order_size_ratio: zero gap");
        const double r = g.delta_min / g.delta_1;
        return r * r;
    }
    if (!(g.rho_min > 0.0) || !(g.rho_1 > 0.0))
        throw numeric_error("leading_order_size_ratio: zero SNR");
    const double r = g.rho_min / g.rho_1;
    return r * r;
}

} // namespace rankstab
