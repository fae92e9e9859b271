#pragma once

// Statistical tests behind the critical-difference analysis: the Friedman
// test on per-dataset ranks (tie-corrected chi-square form, Iman-Davenport
// F refinement behind a flag), Conover-Iman t-based post-hoc pairwise
// comparisons, exact/approximate Wilcoxon signed-rank, Holm step-down
// correction, and the contiguous-run clique construction used by CD
// diagrams. Everything depends on scores only through per-dataset ranks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rankstab/linalg.hpp"
#include "rankstab/ranking.hpp"
#include "rankstab/special_functions.hpp"

namespace rankstab {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double df = 0.0;
};

struct CdSummary {
    std::vector<double> average_ranks;             // matrix pipeline order
    std::vector<std::vector<std::string>> cliques; // maximal runs, best rank first
    double alpha = 0.05;
};

namespace detail {

struct RankTable {
    std::vector<double> ranks;  // N x k per-dataset ranks (average ties)
    double rank_sq_sum = 0.0;   // A = sum of squared rank entries
    std::vector<double> col_sums;
};

inline RankTable rank_table(const ScoreMatrix& m) {
    m.validate();
    const std::size_t n = m.n_datasets();
    const std::size_t k = m.n_pipelines();
    RankTable t;
    t.ranks.resize(n * k);
    t.col_sums.assign(k, 0.0);
    for (std::size_t d = 0; d < n; ++d) {
        const std::vector<double> r = rank_values(m.row(d), m.direction);
        for (std::size_t p = 0; p < k; ++p) {
            t.ranks[d * k + p] = r[p];
            t.col_sums[p] += r[p];
            t.rank_sq_sum += r[p] * r[p];
        }
    }
    return t;
}

} // namespace detail

// Tie-corrected Friedman chi-square:
//   T = (k-1) * sum_j (R_j - N(k+1)/2)^2 / (A - C),  C = N k (k+1)^2 / 4,
// with A the sum of squared rank entries. A == C (every row fully tied)
// degenerates to statistic 0, p = 1. Set iman_davenport for the F-form
// refinement F = (N-1) T / (N(k-1) - T).
inline TestResult friedman_test(const ScoreMatrix& m, bool iman_davenport = false) {
    const std::size_t n = m.n_datasets();
    const std::size_t k = m.n_pipelines();
    if (n < 2) throw validation_error("friedman_test: needs N >= 2 datasets");
    const detail::RankTable t = detail::rank_table(m);

    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    const double c = nn * kk * (kk + 1.0) * (kk + 1.0) / 4.0;
    double spread = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
        const double d = t.col_sums[p] - nn * (kk + 1.0) / 2.0;
        spread += d * d;
    }
    TestResult out;
    out.df = kk - 1.0;
    const double denom = t.rank_sq_sum - c;
    if (denom <= 0.0) {
        out.statistic = 0.0;
        out.p_value = 1.0;
        return out;
    }
    const double chi = (kk - 1.0) * spread / denom;
    if (!iman_davenport) {
        out.statistic = chi;
        out.p_value = chi_squared_sf(chi, kk - 1.0);
        return out;
    }
    const double f_den = nn * (kk - 1.0) - chi;
    out.statistic = f_den > 0.0 ? (nn - 1.0) * chi / f_den
                                : std::numeric_limits<double>::infinity();
    out.df = kk - 1.0;  // numerator df; denominator df is (N-1)(k-1)
    const double d1 = kk - 1.0;
    const double d2 = (nn - 1.0) * (kk - 1.0);
    if (std::isinf(out.statistic)) {
        out.p_value = 0.0;
    } else {
        // F survival via the incomplete beta
        const double x = d2 / (d2 + d1 * out.statistic);
        out.p_value = reg_incomplete_beta(d2 / 2.0, d1 / 2.0, x);
    }
    return out;
}

// The per-pair statistic T = |Rbar_i - Rbar_j| / sqrt(S^2 * 2/N).
inline double conover_iman_statistic(double rbar_i, double rbar_j, double pooled_variance,
                                     double n_datasets) {
    if (!(pooled_variance > 0.0) || !(n_datasets > 0.0))
        throw validation_error("conover_iman_statistic: needs S^2 > 0 and N > 0");
    return std::fabs(rbar_i - rbar_j) / std::sqrt(pooled_variance * 2.0 / n_datasets);
}

// Conover-Iman post-hoc pairwise p-values,
//   T_ij = |Rbar_i - Rbar_j| / sqrt(S^2 * 2/N),
// with S^2 the pooled sample variance of all N*k rank entries about the
// grand mean rank (divisor N(k-1), which is also the t df). Returns the
// symmetric matrix of two-sided p-values, unit diagonal. A fully tied
// table has S^2 = 0 and degenerates to all p = 1.
inline Matrix conover_iman(const ScoreMatrix& m, double alpha = 0.05,
                           std::vector<std::string>* warnings = nullptr) {
    const std::size_t n = m.n_datasets();
    const std::size_t k = m.n_pipelines();
    if (n < 2) throw validation_error("conover_iman: needs N >= 2 datasets");
    const detail::RankTable t = detail::rank_table(m);

    if (warnings) {
        const TestResult f = friedman_test(m);
        if (f.p_value >= alpha)
            warnings->push_back("conover_iman: Friedman did not reject at alpha = " +
                                std::to_string(alpha) + " (p = " + std::to_string(f.p_value) +
                                "); post-hoc comparisons are exploratory");
    }

    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    const double grand_c = nn * kk * (kk + 1.0) * (kk + 1.0) / 4.0;
    const double df = nn * (kk - 1.0);
    const double s2 = (t.rank_sq_sum - grand_c) / df;

    Matrix p(k, k, 1.0);
    if (s2 <= 0.0) return p;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double tstat =
                conover_iman_statistic(t.col_sums[i] / nn, t.col_sums[j] / nn, s2, nn);
            const double pv = 2.0 * (1.0 - student_t_cdf(tstat, df));
            p(i, j) = p(j, i) = std::min(1.0, pv);
        }
    }
    return p;
}

// Paired Wilcoxon signed-rank test, two-sided. Zero differences drop,
// tied |differences| get average ranks. Exact enumeration of the signed
// rank-sum distribution for n <= 25 (dynamic programming over doubled
// ranks), otherwise the normal approximation with continuity correction
// and the tie adjustment in the variance.
inline TestResult wilcoxon_signed_rank(const std::vector<double>& diffs) {
    std::vector<double> abs_d;
    std::vector<int> sign;
    for (double d : diffs) {
        if (!std::isfinite(d)) throw validation_error("wilcoxon_signed_rank: non-finite input");
        if (d != 0.0) {
            abs_d.push_back(std::fabs(d));
            sign.push_back(d > 0 ? 1 : -1);
        }
    }
    const std::size_t n = abs_d.size();
    if (n == 0) throw validation_error("wilcoxon_signed_rank: all differences are zero");

    // smallest |difference| gets rank 1; a single nonzero difference is its own rank
    const std::vector<double> r =
        n == 1 ? std::vector<double>{1.0}
               : rank_values({abs_d.data(), n}, ScoreDirection::lower_is_better);

    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (sign[i] > 0) w_plus += r[i];

    TestResult out;
    out.statistic = w_plus;
    out.df = static_cast<double>(n);

    if (n <= 25) {
        // doubled ranks are integers; DP over achievable doubled sums
        std::vector<std::int64_t> r2(n);
        std::int64_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            r2[i] = static_cast<std::int64_t>(std::llround(2.0 * r[i]));
            total += r2[i];
        }
        std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
        count[0] = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::int64_t s = total - r2[i]; s >= 0; --s)
                count[static_cast<std::size_t>(s + r2[i])] += count[static_cast<std::size_t>(s)];
        const double denom = std::ldexp(1.0, static_cast<int>(n));  // 2^n
        const std::int64_t w2 = static_cast<std::int64_t>(std::llround(2.0 * w_plus));
        double le = 0.0, ge = 0.0;
        for (std::int64_t s = 0; s <= total; ++s) {
            if (s <= w2) le += count[static_cast<std::size_t>(s)];
            if (s >= w2) ge += count[static_cast<std::size_t>(s)];
        }
        out.p_value = std::min(1.0, 2.0 * std::min(le, ge) / denom);
        return out;
    }

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_adj = 0.0;
    {
        std::vector<double> sorted = abs_d;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i + 1;
            while (j < n && sorted[j] == sorted[i]) ++j;
            const double tcount = static_cast<double>(j - i);
            tie_adj += tcount * tcount * tcount - tcount;
            i = j;
        }
    }
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_adj / 48.0;
    if (var <= 0.0) throw numeric_error("wilcoxon_signed_rank: zero variance");
    const double dev = w_plus - mean;
    const double cc = dev > 0 ? -0.5 : dev < 0 ? 0.5 : 0.0;
    const double z = (dev + cc) / std::sqrt(var);
    out.p_value = std::min(1.0, 2.0 * std_normal_cdf(-std::fabs(z)));
    return out;
}

// Holm step-down adjustment; output order matches input order, values never
// decrease, clamp at 1.
inline std::vector<double> holm_correction(const std::vector<double>& p) {
    const std::size_t m = p.size();
    for (double x : p)
        if (!(x >= 0.0 && x <= 1.0))
            throw validation_error("holm_correction: p-values must lie in [0, 1]");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> adjusted(m);
    double running = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double stepped = static_cast<double>(m - i) * p[order[i]];
        running = std::max(running, std::min(1.0, stepped));
        adjusted[order[i]] = running;
    }
    return adjusted;
}

// Average ranks plus maximal contiguous runs (in rank order) of pipelines
// whose internal pairwise Conover-Iman p-values all sit at or above alpha —
// the groups a CD diagram joins with a bar. Singletons are kept so every
// pipeline appears in exactly the runs that are maximal.
inline CdSummary cd_groups(const ScoreMatrix& m, double alpha = 0.05,
                           std::vector<std::string>* warnings = nullptr) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw validation_error("cd_groups: alpha must lie in (0, 1)");
    const AggregateRanking agg = aggregate_ranking(m);
    const Matrix p = conover_iman(m, alpha, warnings);
    const std::size_t k = m.n_pipelines();

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return agg.average_ranks[a] < agg.average_ranks[b];
    });

    CdSummary out;
    out.alpha = alpha;
    out.average_ranks = agg.average_ranks;

    std::size_t prev_end = 0;  // one past the end of the previous maximal run
    for (std::size_t s = 0; s < k; ++s) {
        std::size_t e = s;  // inclusive end of the run starting at s
        while (e + 1 < k) {
            bool ok = true;
            for (std::size_t i = s; ok && i <= e; ++i)
                ok = p(order[i], order[e + 1]) >= alpha;
            if (!ok) break;
            ++e;
        }
        if (e + 1 > prev_end) {  // maximal: not contained in an earlier run
            std::vector<std::string> clique;
            for (std::size_t i = s; i <= e; ++i) clique.push_back(m.pipeline_ids[order[i]]);
            out.cliques.push_back(std::move(clique));
            prev_end = e + 1;
        }
    }
    return out;
}

} // namespace rankstab
