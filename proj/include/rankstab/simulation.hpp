#pragma once

// Monte Carlo generator for the Gaussian performance model and the
// empirical estimators that validate the closed forms.
//
// Replicate r draws from the substream (seed, r), so results are identical
// whether replicates run sequentially or in parallel; the mean/SE reduction
// is a pairwise sum in replicate-index order, which keeps them bit-stable.
//
// Draw order within a dataset is fixed: first the p latent meta-feature
// normals (only when the model carries a bias term), then the k noise
// normals, one pipeline at a time. One Gaussian costs exactly one uniform.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rankstab/ranking.hpp"
#include "rankstab/rng.hpp"
#include "rankstab/theory.hpp"

namespace rankstab {

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t replicates = 0;
    std::uint64_t seed = 0;
};

namespace detail {

// N x k score draw into `out` (row-major), using `rng` in the documented
// draw order. `factor` is the symmetric factor of sigma_z when bias is set.
inline void draw_scores(const PerformanceModel& model, std::int64_t n, CounterRng& rng,
                        const Matrix* factor, std::vector<double>& out) {
    const std::size_t k = model.mu.size();
    const std::size_t p = factor ? factor->rows : 0;
    out.resize(static_cast<std::size_t>(n) * k);
    std::vector<double> raw(p), z(p);
    for (std::int64_t d = 0; d < n; ++d) {
        if (factor) {
            for (std::size_t c = 0; c < p; ++c) raw[c] = rng.next_gaussian();
            for (std::size_t r = 0; r < p; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < p; ++c) s += (*factor)(r, c) * raw[c];
                z[r] = s;
            }
        }
        for (std::size_t i = 0; i < k; ++i) {
            double x = model.mu[i] + model.sigma * rng.next_gaussian();
            if (factor)
                for (std::size_t r = 0; r < p; ++r) x += (*model.bias)(i, r) * z[r];
            out[static_cast<std::size_t>(d) * k + i] = x;
        }
    }
}

inline void column_means(const std::vector<double>& scores, std::int64_t n, std::size_t k,
                         std::vector<double>& means) {
    means.assign(k, 0.0);
    for (std::int64_t d = 0; d < n; ++d)
        for (std::size_t i = 0; i < k; ++i) means[i] += scores[static_cast<std::size_t>(d) * k + i];
    for (std::size_t i = 0; i < k; ++i) means[i] /= static_cast<double>(n);
}

inline McEstimate reduce(const std::vector<double>& values, std::uint64_t seed) {
    const std::size_t r = values.size();
    McEstimate est;
    est.replicates = static_cast<std::int64_t>(r);
    est.seed = seed;
    est.mean = pairwise_sum(values) / static_cast<double>(r);
    if (r >= 2) {
        std::vector<double> sq(r);
        for (std::size_t i = 0; i < r; ++i) {
            const double d = values[i] - est.mean;
            sq[i] = d * d;
        }
        est.std_error = std::sqrt(pairwise_sum(sq) / (static_cast<double>(r - 1) * r));
    }
    return est;
}

} // namespace detail

// One benchmark of n datasets from the model; bit-identical for a given
// (model, n, seed).
inline ScoreMatrix simulate_scores(const PerformanceModel& model, std::int64_t n,
                                   std::uint64_t seed) {
    model.validate();
    if (n < 1) throw validation_error("simulate_scores: n must be >= 1");
    const std::size_t k = model.mu.size();

    Matrix factor;
    const Matrix* factor_ptr = nullptr;
    if (model.bias) {
        factor = psd_factor(*model.sigma_z);
        factor_ptr = &factor;
    }

    CounterRng rng(seed, 0);
    ScoreMatrix m;
    m.pipeline_ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) m.pipeline_ids.push_back("p" + std::to_string(i + 1));
    m.dataset_ids.reserve(static_cast<std::size_t>(n));
    for (std::int64_t d = 0; d < n; ++d) m.dataset_ids.push_back("d" + std::to_string(d + 1));
    detail::draw_scores(model, n, rng, factor_ptr, m.scores);
    m.validate();
    return m;
}

// Monte Carlo mean Kendall-tau. For two_benchmarks each replicate draws two
// independent size-n benchmarks, ranks pipelines by per-benchmark mean
// score, and records their tau; for oracle it compares one benchmark's
// ranking against the ranking induced by mu.
inline McEstimate mc_expected_tau(const PerformanceModel& model, std::int64_t n,
                                  std::int64_t replicates, std::uint64_t seed,
                                  AgreementTarget target, unsigned threads = 1) {
    model.validate();
    if (n < 1) throw validation_error("mc_expected_tau: n must be >= 1");
    if (replicates < 2) throw validation_error("mc_expected_tau: needs replicates >= 2");
    const std::size_t k = model.mu.size();

    Matrix factor;
    const Matrix* factor_ptr = nullptr;
    if (model.bias) {
        factor = psd_factor(*model.sigma_z);
        factor_ptr = &factor;
    }
    const std::vector<double> oracle_ranks =
        rank_values({model.mu.data(), k}, ScoreDirection::higher_is_better);

    std::vector<double> taus(static_cast<std::size_t>(replicates));
    parallel_for_index(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        CounterRng rng(seed, static_cast<std::uint64_t>(r));
        std::vector<double> scores, means_a, means_b;
        detail::draw_scores(model, n, rng, factor_ptr, scores);
        detail::column_means(scores, n, k, means_a);
        const std::vector<double> ranks_a =
            rank_values({means_a.data(), k}, ScoreDirection::higher_is_better);
        if (target == AgreementTarget::two_benchmarks) {
            detail::draw_scores(model, n, rng, factor_ptr, scores);
            detail::column_means(scores, n, k, means_b);
            const std::vector<double> ranks_b =
                rank_values({means_b.data(), k}, ScoreDirection::higher_is_better);
            taus[r] = kendall_tau_values(ranks_a, ranks_b);
        } else {
            taus[r] = kendall_tau_values(ranks_a, oracle_ranks);
        }
    });
    return detail::reduce(taus, seed);
}

// Fraction of replicates in which two independent benchmarks name different
// top pipelines. Top-1 ties (measure zero under the Gaussian model) break
// to the lowest pipeline index.
inline McEstimate mc_position1_disagreement(const PerformanceModel& model, std::int64_t n,
                                            std::int64_t replicates, std::uint64_t seed,
                                            unsigned threads = 1) {
    model.validate();
    if (n < 1) throw validation_error("mc_position1_disagreement: n must be >= 1");
    if (replicates < 2) throw validation_error("mc_position1_disagreement: needs replicates >= 2");
    const std::size_t k = model.mu.size();

    Matrix factor;
    const Matrix* factor_ptr = nullptr;
    if (model.bias) {
        factor = psd_factor(*model.sigma_z);
        factor_ptr = &factor;
    }

    const auto argmax = [](const std::vector<double>& v) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] > v[best]) best = i;
        return best;
    };

    std::vector<double> hits(static_cast<std::size_t>(replicates));
    parallel_for_index(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        CounterRng rng(seed, static_cast<std::uint64_t>(r));
        std::vector<double> scores, means;
        detail::draw_scores(model, n, rng, factor_ptr, scores);
        detail::column_means(scores, n, k, means);
        const std::size_t top_a = argmax(means);
        detail::draw_scores(model, n, rng, factor_ptr, scores);
        detail::column_means(scores, n, k, means);
        const std::size_t top_b = argmax(means);
        hits[r] = top_a != top_b ? 1.0 : 0.0;
    });
    return detail::reduce(hits, seed);
}

} // namespace rankstab
