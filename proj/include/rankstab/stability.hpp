#pragma once

// Empirical ranking-stability pipeline: disjoint-subset bootstrap of the
// two-benchmark Kendall-tau, least-squares fit of the asymptotic
// disagreement law 1 - tau(N) = (C / sqrt(N)) exp(-a N), extrapolation to
// the implied oracle agreement (half the disagreement), leave-one-group-out
// stability with size-matched null bands, and meta-feature percentile
// splits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rankstab/ranking.hpp"
#include "rankstab/rng.hpp"
#include "rankstab/simulation.hpp"

namespace rankstab {

struct StabilityPoint {
    std::int64_t n = 0;
    double tau_mean = 0.0;
    double tau_se = 0.0;
};

struct StabilityFit {
    double c = 0.0;        // amplitude, > 0
    double a = 0.0;        // decay rate per dataset, >= 0
    double residual = 0.0; // weighted squared loss at the optimum
    std::vector<StabilityPoint> points;

    double disagreement(double n) const { return c / std::sqrt(n) * std::exp(-a * n); }
};

struct GroupStability {
    std::string group_id;
    std::int64_t n_group = 0;
    double tau = 0.0;
    double null_low = 0.0;
    double null_high = 0.0;
    bool inside_band = false;
};

namespace detail {

// Type-7 linear-interpolation quantile over an unsorted copy.
inline double quantile_type7(std::vector<double> v, double q) {
    if (v.empty()) throw validation_error("quantile: empty sample");
    std::sort(v.begin(), v.end());
    if (q <= 0.0) return v.front();
    if (q >= 1.0) return v.back();
    const double h = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = h - static_cast<double>(lo);
    return v[lo] * (1.0 - w) + v[hi] * w;
}

// Ranking of pipelines by mean score over a subset of dataset rows.
inline std::vector<double> subset_mean_ranks(const ScoreMatrix& m,
                                             const std::vector<std::size_t>& rows) {
    const std::size_t k = m.n_pipelines();
    std::vector<double> means(k, 0.0);
    for (std::size_t r : rows)
        for (std::size_t p = 0; p < k; ++p) means[p] += m.at(r, p);
    for (std::size_t p = 0; p < k; ++p) means[p] /= static_cast<double>(rows.size());
    return rank_values({means.data(), k}, m.direction);
}

// Aggregate ranking (mean per-dataset rank, re-ranked) over a subset of rows.
inline std::vector<double> subset_aggregate_rank_vector(const ScoreMatrix& m,
                                                        const std::vector<std::size_t>& rows) {
    const std::size_t k = m.n_pipelines();
    std::vector<double> sums(k, 0.0);
    for (std::size_t r : rows) {
        const std::vector<double> pr = rank_values(m.row(r), m.direction);
        for (std::size_t p = 0; p < k; ++p) sums[p] += pr[p];
    }
    for (std::size_t p = 0; p < k; ++p) sums[p] /= static_cast<double>(rows.size());
    return rank_values({sums.data(), k}, ScoreDirection::lower_is_better);
}

} // namespace detail

// Per replicate: draw two disjoint uniformly random dataset subsets of
// subset_size via one shuffled permutation split in half, rank pipelines by
// mean score within each, record their tau. Requires 2*subset_size <= N.
inline McEstimate disjoint_subset_tau(const ScoreMatrix& m, std::int64_t subset_size,
                                      std::int64_t replicates, std::uint64_t seed,
                                      unsigned threads = 1,
                                      std::vector<double>* samples_out = nullptr) {
    m.validate();
    if (m.n_datasets() < 2) throw validation_error("disjoint_subset_tau: needs N >= 2");
    if (subset_size < 1) throw validation_error("disjoint_subset_tau: subset_size must be >= 1");
    if (replicates < 1) throw validation_error("disjoint_subset_tau: replicates must be >= 1");
    if (2 * static_cast<std::size_t>(subset_size) > m.n_datasets())
        throw validation_error("disjoint_subset_tau: subset_size may be at most half of N");

    const std::size_t take = 2 * static_cast<std::size_t>(subset_size);
    std::vector<double> taus(static_cast<std::size_t>(replicates));
    parallel_for_index(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        CounterRng rng(seed, static_cast<std::uint64_t>(r));
        std::vector<std::size_t> idx;
        rng.sample_indices(m.n_datasets(), take, idx);
        const std::vector<std::size_t> first(idx.begin(), idx.begin() + subset_size);
        const std::vector<std::size_t> second(idx.begin() + subset_size, idx.end());
        taus[r] = kendall_tau_values(detail::subset_mean_ranks(m, first),
                                     detail::subset_mean_ranks(m, second));
    });
    if (samples_out) *samples_out = taus;
    McEstimate est = detail::reduce(taus, seed);
    return est;
}

namespace detail {

struct FitObjective {
    const std::vector<StabilityPoint>& pts;
    const std::vector<double>& weights;

    // theta = (log C, a); a < 0 is pushed back by a quadratic penalty and
    // clamped on readout.
    double operator()(double log_c, double a) const {
        double penalty = 0.0;
        if (a < 0.0) {
            penalty = 1e8 * a * a;
            a = 0.0;
        }
        const double c = std::exp(log_c);
        double loss = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double n = static_cast<double>(pts[i].n);
            const double pred = c / std::sqrt(n) * std::exp(-a * n);
            const double diff = pred - (1.0 - pts[i].tau_mean);
            loss += weights[i] * diff * diff;
        }
        return loss + penalty;
    }
};

// Nelder-Mead on a 2-parameter objective; deterministic given the start.
template <typename F>
inline void nelder_mead_2d(const F& f, double& x0, double& x1) {
    struct Vertex {
        double x[2];
        double val;
    };
    const double step = 0.25;
    Vertex simplex[3];
    simplex[0] = {{x0, x1}, 0.0};
    simplex[1] = {{x0 + step, x1}, 0.0};
    simplex[2] = {{x0, x1 + step + 1e-3}, 0.0};
    for (auto& v : simplex) v.val = f(v.x[0], v.x[1]);

    for (int it = 0; it < 4000; ++it) {
        std::sort(std::begin(simplex), std::end(simplex),
                  [](const Vertex& a, const Vertex& b) { return a.val < b.val; });
        const double spread = std::fabs(simplex[2].val - simplex[0].val);
        if (spread < 1e-16 * (1.0 + std::fabs(simplex[0].val))) break;

        const double cx = 0.5 * (simplex[0].x[0] + simplex[1].x[0]);
        const double cy = 0.5 * (simplex[0].x[1] + simplex[1].x[1]);
        Vertex refl{{cx + (cx - simplex[2].x[0]), cy + (cy - simplex[2].x[1])}, 0.0};
        refl.val = f(refl.x[0], refl.x[1]);
        if (refl.val < simplex[0].val) {
            Vertex exp_{{cx + 2.0 * (cx - simplex[2].x[0]), cy + 2.0 * (cy - simplex[2].x[1])}, 0.0};
            exp_.val = f(exp_.x[0], exp_.x[1]);
            simplex[2] = exp_.val < refl.val ? exp_ : refl;
        } else if (refl.val < simplex[1].val) {
            simplex[2] = refl;
        } else {
            Vertex contr{{cx + 0.5 * (simplex[2].x[0] - cx), cy + 0.5 * (simplex[2].x[1] - cy)}, 0.0};
            contr.val = f(contr.x[0], contr.x[1]);
            if (contr.val < simplex[2].val) {
                simplex[2] = contr;
            } else {
                for (int i = 1; i < 3; ++i) {
                    simplex[i].x[0] = 0.5 * (simplex[i].x[0] + simplex[0].x[0]);
                    simplex[i].x[1] = 0.5 * (simplex[i].x[1] + simplex[0].x[1]);
                    simplex[i].val = f(simplex[i].x[0], simplex[i].x[1]);
                }
            }
        }
    }
    std::sort(std::begin(simplex), std::end(simplex),
              [](const Vertex& a, const Vertex& b) { return a.val < b.val; });
    x0 = simplex[0].x[0];
    x1 = simplex[0].x[1];
}

} // namespace detail

// Weighted least-squares fit of 1 - tau(N) = (C / sqrt(N)) exp(-a N).
// Initial estimate from the log-domain linearization
//     log(1 - tau) = log C - log(N)/2 - a N
// by weighted linear regression, refined by simplex descent on the weighted
// nonlinear loss with a floored at 0. Weights are 1/SE^2 when every point
// carries a positive SE, uniform otherwise; scaling all SEs by a constant
// does not move the optimum.
inline StabilityFit fit_stability_curve(const std::vector<StabilityPoint>& points) {
    std::vector<StabilityPoint> pts = points;
    std::sort(pts.begin(), pts.end(),
              [](const StabilityPoint& a, const StabilityPoint& b) { return a.n < b.n; });
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (i == 0 || pts[i].n != pts[i - 1].n) ++distinct;
    if (distinct < 3)
        throw validation_error("fit_stability_curve: needs >= 3 points with distinct n");
    for (const auto& p : pts) {
        if (p.n < 1) throw validation_error("fit_stability_curve: n must be >= 1");
        if (!(p.tau_mean < 1.0))
            throw numeric_error("fit_stability_curve: tau = 1 leaves nothing to fit");
        if (!std::isfinite(p.tau_mean) || !std::isfinite(p.tau_se) || p.tau_se < 0.0)
            throw validation_error("fit_stability_curve: bad point");
    }

    bool all_se = true;
    for (const auto& p : pts) all_se = all_se && p.tau_se > 0.0;
    std::vector<double> w(pts.size(), 1.0);
    if (all_se)
        for (std::size_t i = 0; i < pts.size(); ++i) w[i] = 1.0 / (pts[i].tau_se * pts[i].tau_se);
    // normalize so the loss scale is SE-scale free
    const double wsum = pairwise_sum(w);
    for (double& x : w) x *= static_cast<double>(pts.size()) / wsum;

    // log-domain init: y = log(1 - tau) + log(n)/2 regressed on n
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double n = static_cast<double>(pts[i].n);
        const double y = std::log(1.0 - pts[i].tau_mean) + 0.5 * std::log(n);
        sw += w[i];
        sx += w[i] * n;
        sy += w[i] * y;
        sxx += w[i] * n * n;
        sxy += w[i] * n * y;
    }
    const double det = sw * sxx - sx * sx;
    double slope = det != 0.0 ? (sw * sxy - sx * sy) / det : 0.0;
    double intercept = det != 0.0 ? (sxx * sy - sx * sxy) / det : sy / sw;
    double log_c = intercept;
    double a = std::max(0.0, -slope);

    const detail::FitObjective obj{pts, w};
    detail::nelder_mead_2d(obj, log_c, a);
    detail::nelder_mead_2d(obj, log_c, a);  // restart from the optimum

    StabilityFit fit;
    fit.a = std::max(0.0, a);
    // C has a closed weighted-LS form once a is fixed; use it as the final
    // polish so noiseless inputs recover exactly.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double n = static_cast<double>(pts[i].n);
        const double basis = std::exp(-fit.a * n) / std::sqrt(n);
        num += w[i] * basis * (1.0 - pts[i].tau_mean);
        den += w[i] * basis * basis;
    }
    fit.c = den > 0.0 ? num / den : std::exp(log_c);
    if (!(fit.c > 0.0))
        throw numeric_error("fit_stability_curve: fit collapsed to a non-positive amplitude");
    fit.residual = obj(std::log(fit.c), fit.a);
    fit.points = std::move(pts);
    return fit;
}

struct OracleExtrapolation {
    double tau_two_benchmarks = 0.0;
    double tau_oracle = 0.0;
    bool out_of_range = false;  // formula left [-1, 1]; values reported unclamped
};

// tau_two = 1 - d(N), tau_oracle = 1 - d(N)/2 with d the fitted
// disagreement; the factor-two relation is exact by construction.
inline OracleExtrapolation extrapolate_oracle(const StabilityFit& fit, std::int64_t n) {
    if (n < 1) throw validation_error("extrapolate_oracle: n must be >= 1");
    if (!(fit.c >= 0.0) || !(fit.a >= 0.0) || !std::isfinite(fit.c))
        throw validation_error("extrapolate_oracle: invalid fit");
    const double d = fit.c == 0.0 ? 0.0 : fit.disagreement(static_cast<double>(n));
    OracleExtrapolation out;
    out.tau_two_benchmarks = 1.0 - d;
    out.tau_oracle = 1.0 - 0.5 * d;
    out.out_of_range = out.tau_two_benchmarks < -1.0;
    return out;
}

// Per group: tau between the aggregate ranking on the group's datasets
// alone and on the full matrix, plus a size-matched null band from b random
// subsets (2.5/97.5 percentiles). Null subsets are drawn from the
// lexicographically sorted dataset ids, so row order never matters.
inline std::vector<GroupStability> leave_one_group_out(
    const ScoreMatrix& m, const std::map<std::string, std::string>& groups, std::int64_t b,
    std::uint64_t seed, unsigned threads = 1) {
    m.validate();
    if (b < 2) throw validation_error("leave_one_group_out: needs b >= 2 null draws");
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t d = 0; d < m.n_datasets(); ++d) {
        const auto it = groups.find(m.dataset_ids[d]);
        if (it == groups.end())
            throw validation_error("leave_one_group_out: dataset '" + m.dataset_ids[d] +
                                   "' has no group");
        members[it->second].push_back(d);
    }

    const AggregateRanking full = aggregate_ranking(m);

    std::vector<std::size_t> canonical(m.n_datasets());
    for (std::size_t i = 0; i < canonical.size(); ++i) canonical[i] = i;
    std::sort(canonical.begin(), canonical.end(), [&](std::size_t x, std::size_t y) {
        return m.dataset_ids[x] < m.dataset_ids[y];
    });

    std::vector<GroupStability> out;
    std::size_t group_index = 0;
    for (const auto& [gid, rows] : members) {
        GroupStability gs;
        gs.group_id = gid;
        gs.n_group = static_cast<std::int64_t>(rows.size());
        gs.tau = kendall_tau_values(detail::subset_aggregate_rank_vector(m, rows), full.ranking.ranks);

        std::vector<double> null_taus(static_cast<std::size_t>(b));
        parallel_for_index(static_cast<std::size_t>(b), threads, [&](std::size_t r) {
            CounterRng rng(seed, (static_cast<std::uint64_t>(group_index) << 32) ^ r);
            std::vector<std::size_t> pick;
            rng.sample_indices(canonical.size(), rows.size(), pick);
            std::vector<std::size_t> subset(pick.size());
            for (std::size_t i = 0; i < pick.size(); ++i) subset[i] = canonical[pick[i]];
            null_taus[r] =
                kendall_tau_values(detail::subset_aggregate_rank_vector(m, subset), full.ranking.ranks);
        });
        gs.null_low = detail::quantile_type7(null_taus, 0.025);
        gs.null_high = detail::quantile_type7(null_taus, 0.975);
        gs.inside_band = gs.tau >= gs.null_low && gs.tau <= gs.null_high;
        out.push_back(std::move(gs));
        ++group_index;
    }
    return out;
}

struct MetafeatureSplit {
    double tau = 0.0;
    std::vector<std::string> low_ids;
    std::vector<std::string> high_ids;
};

// tau between the aggregate rankings of the lower and upper percentile
// tails of a per-dataset meta-feature. Datasets exactly at a threshold are
// included in the tail.
inline MetafeatureSplit metafeature_split_tau(const ScoreMatrix& m,
                                              const std::map<std::string, double>& feature,
                                              double percentile = 1.0 / 3.0) {
    m.validate();
    if (!(percentile > 0.0 && percentile <= 0.5))
        throw validation_error("metafeature_split_tau: percentile must lie in (0, 0.5]");
    std::vector<double> values(m.n_datasets());
    for (std::size_t d = 0; d < m.n_datasets(); ++d) {
        const auto it = feature.find(m.dataset_ids[d]);
        if (it == feature.end())
            throw validation_error("metafeature_split_tau: dataset '" + m.dataset_ids[d] +
                                   "' has no feature value");
        if (!std::isfinite(it->second))
            throw validation_error("metafeature_split_tau: non-finite feature value");
        values[d] = it->second;
    }
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    if (*mn == *mx)
        throw validation_error("metafeature_split_tau: constant feature leaves empty tails");

    const double lo_cut = detail::quantile_type7(values, percentile);
    const double hi_cut = detail::quantile_type7(values, 1.0 - percentile);

    MetafeatureSplit out;
    std::vector<std::size_t> low_rows, high_rows;
    for (std::size_t d = 0; d < m.n_datasets(); ++d) {
        if (values[d] <= lo_cut) {
            low_rows.push_back(d);
            out.low_ids.push_back(m.dataset_ids[d]);
        }
        if (values[d] >= hi_cut) {
            high_rows.push_back(d);
            out.high_ids.push_back(m.dataset_ids[d]);
        }
    }
    if (low_rows.empty() || high_rows.empty())
        throw validation_error("metafeature_split_tau: a percentile tail is empty");

    out.tau = kendall_tau_values(detail::subset_aggregate_rank_vector(m, low_rows),
                                 detail::subset_aggregate_rank_vector(m, high_rows));
    return out;
}

} // namespace rankstab
