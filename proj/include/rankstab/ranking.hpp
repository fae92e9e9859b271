#pragma once

// Rank construction from scores and Kendall-tau agreement between rankings.
//
// Rankings assign 1 to the best pipeline; tied pipelines share the average
// of the positions they span, so sum(ranks) = k(k+1)/2 always holds.
// kendall_tau uses the tie-corrected (tau-b) normalization so that
// tau(a, a) = 1 even when average-rank aggregation produced ties; for
// strict rankings it reduces to 1 - 2 * discordant / (k(k-1)/2).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rankstab/errors.hpp"

namespace rankstab {

enum class ScoreDirection { higher_is_better, lower_is_better };

struct Ranking {
    std::vector<double> ranks;             // 1 = best; ties carry average positions
    std::vector<std::string> pipeline_ids;
};

struct ScoreMatrix {
    std::vector<double> scores;            // row-major N x k
    std::vector<std::string> dataset_ids;  // N
    std::vector<std::string> pipeline_ids; // k
    ScoreDirection direction = ScoreDirection::higher_is_better;

    std::size_t n_datasets() const { return dataset_ids.size(); }
    std::size_t n_pipelines() const { return pipeline_ids.size(); }
    double at(std::size_t d, std::size_t p) const { return scores[d * n_pipelines() + p]; }
    std::span<const double> row(std::size_t d) const {
        return {scores.data() + d * n_pipelines(), n_pipelines()};
    }

    void validate() const {
        if (dataset_ids.empty()) throw validation_error("ScoreMatrix: needs at least 1 dataset");
        if (pipeline_ids.size() < 2) throw validation_error("ScoreMatrix: needs at least 2 pipelines");
        if (scores.size() != dataset_ids.size() * pipeline_ids.size())
            throw validation_error("ScoreMatrix: cell count does not match ids");
        for (std::size_t d = 0; d < n_datasets(); ++d)
            for (std::size_t p = 0; p < n_pipelines(); ++p)
                if (!std::isfinite(at(d, p)))
                    throw validation_error("ScoreMatrix: non-finite score at dataset '" +
                                           dataset_ids[d] + "', pipeline '" + pipeline_ids[p] + "'");
        std::set<std::string> ds(dataset_ids.begin(), dataset_ids.end());
        if (ds.size() != dataset_ids.size())
            throw validation_error("ScoreMatrix: duplicate dataset ids");
        std::set<std::string> ps(pipeline_ids.begin(), pipeline_ids.end());
        if (ps.size() != pipeline_ids.size())
            throw validation_error("ScoreMatrix: duplicate pipeline ids");
    }
};

// Average ranks of a score vector, 1 = best. Deterministic; ties get the
// average of the positions they span.
inline std::vector<double> rank_values(std::span<const double> scores,
                                       ScoreDirection direction) {
    const std::size_t k = scores.size();
    if (k < 2) throw validation_error("ranks_from_scores: needs at least 2 entries");
    for (double s : scores)
        if (!std::isfinite(s)) throw validation_error("ranks_from_scores: non-finite score");

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    const bool higher = direction == ScoreDirection::higher_is_better;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return higher ? scores[a] > scores[b] : scores[a] < scores[b];
    });

    std::vector<double> ranks(k);
    std::size_t i = 0;
    while (i < k) {
        std::size_t j = i + 1;
        while (j < k && scores[order[j]] == scores[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1..j
        for (std::size_t m = i; m < j; ++m) ranks[order[m]] = avg;
        i = j;
    }
    return ranks;
}

inline Ranking ranks_from_scores(std::span<const double> scores,
                                 std::vector<std::string> pipeline_ids,
                                 ScoreDirection direction = ScoreDirection::higher_is_better) {
    if (scores.size() != pipeline_ids.size())
        throw validation_error("ranks_from_scores: ids do not match scores");
    return Ranking{rank_values(scores, direction), std::move(pipeline_ids)};
}

struct AggregateRanking {
    std::vector<double> average_ranks;  // mean per-dataset rank, pipeline order of the matrix
    Ranking ranking;                    // re-ranked average ranks (1 = best average rank)
};

// Per-dataset ranks averaged over datasets, then re-ranked. Average ranks
// are sums of half-integers divided by N, so they are exactly invariant to
// dataset order.
inline AggregateRanking aggregate_ranking(const ScoreMatrix& m) {
    m.validate();
    const std::size_t n = m.n_datasets();
    const std::size_t k = m.n_pipelines();
    std::vector<double> sums(k, 0.0);
    for (std::size_t d = 0; d < n; ++d) {
        const std::vector<double> r = rank_values(m.row(d), m.direction);
        for (std::size_t p = 0; p < k; ++p) sums[p] += r[p];
    }
    AggregateRanking out;
    out.average_ranks.resize(k);
    for (std::size_t p = 0; p < k; ++p) out.average_ranks[p] = sums[p] / static_cast<double>(n);
    out.ranking = ranks_from_scores(out.average_ranks, m.pipeline_ids,
                                    ScoreDirection::lower_is_better);
    return out;
}

namespace detail {

// Strict inversions of v (pairs i<j with v[i] > v[j]) by merge sort.
inline std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf) {
    const std::size_t n = v.size();
    if (n < 2) return 0;
    std::uint64_t inv = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t a = lo, b = mid, o = lo;
            while (a < mid && b < hi) {
                if (v[b] < v[a]) {   // strict: equal keys are not inversions
                    inv += mid - a;
                    buf[o++] = v[b++];
                } else {
                    buf[o++] = v[a++];
                }
            }
            while (a < mid) buf[o++] = v[a++];
            while (b < hi) buf[o++] = v[b++];
            std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
        }
    }
    return inv;
}

inline std::uint64_t tie_pair_count(std::vector<double> vals) {
    std::sort(vals.begin(), vals.end());
    std::uint64_t pairs = 0;
    std::size_t i = 0;
    while (i < vals.size()) {
        std::size_t j = i + 1;
        while (j < vals.size() && vals[j] == vals[i]) ++j;
        const std::uint64_t t = j - i;
        pairs += t * (t - 1) / 2;
        i = j;
    }
    return pairs;
}

} // namespace detail

// Tie-corrected Kendall tau between rank vectors over the same items.
// Exact integer pair counts feed the final division, so the result does not
// drift with k. Both rankings fully tied: 1 if identical, error otherwise.
inline double kendall_tau_values(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t k = a.size();
    if (k != b.size() || k < 2)
        throw validation_error("kendall_tau: rankings must share at least 2 items");

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (a[x] != a[y]) return a[x] < a[y];
        return b[x] < b[y];
    });

    const std::uint64_t n0 = static_cast<std::uint64_t>(k) * (k - 1) / 2;
    const std::uint64_t xtie = detail::tie_pair_count(a);
    const std::uint64_t ytie = detail::tie_pair_count(b);

    std::uint64_t ntie = 0;  // pairs tied in both
    {
        std::size_t i = 0;
        while (i < k) {
            std::size_t j = i + 1;
            while (j < k && a[order[j]] == a[order[i]] && b[order[j]] == b[order[i]]) ++j;
            const std::uint64_t t = j - i;
            ntie += t * (t - 1) / 2;
            i = j;
        }
    }

    std::vector<double> bseq(k), buf(k);
    for (std::size_t i = 0; i < k; ++i) bseq[i] = b[order[i]];
    const std::uint64_t dis = detail::count_inversions(bseq, buf);

    if (n0 == xtie || n0 == ytie) {
        if (a == b) return 1.0;
        throw numeric_error("kendall_tau: a fully tied ranking carries no order information");
    }

    const auto i64 = [](std::uint64_t u) { return static_cast<std::int64_t>(u); };
    const std::int64_t con_minus_dis =
        i64(n0) - i64(xtie) - i64(ytie) + i64(ntie) - 2 * i64(dis);
    const double denom = std::sqrt(static_cast<double>(n0 - xtie)) *
                         std::sqrt(static_cast<double>(n0 - ytie));
    return static_cast<double>(con_minus_dis) / denom;
}

// Aligns b to a's pipeline order first; the pipeline sets must match.
inline double kendall_tau(const Ranking& a, const Ranking& b) {
    if (a.pipeline_ids.size() != b.pipeline_ids.size())
        throw validation_error("kendall_tau: pipeline sets differ in size");
    if (a.pipeline_ids == b.pipeline_ids) return kendall_tau_values(a.ranks, b.ranks);
    std::map<std::string, double> lookup;
    for (std::size_t i = 0; i < b.pipeline_ids.size(); ++i)
        lookup.emplace(b.pipeline_ids[i], b.ranks[i]);
    if (lookup.size() != b.pipeline_ids.size())
        throw validation_error("kendall_tau: duplicate pipeline ids");
    std::vector<double> aligned(a.pipeline_ids.size());
    for (std::size_t i = 0; i < a.pipeline_ids.size(); ++i) {
        const auto it = lookup.find(a.pipeline_ids[i]);
        if (it == lookup.end())
            throw validation_error("kendall_tau: pipeline '" + a.pipeline_ids[i] +
                                   "' missing from the second ranking");
        aligned[i] = it->second;
    }
    return kendall_tau_values(a.ranks, aligned);
}

// (1 - tau) / 2, the fraction of disagreeing pairs for strict rankings.
inline double disagreement_fraction(double tau) {
    if (!(tau >= -1.0 && tau <= 1.0))
        throw validation_error("disagreement_fraction: tau outside [-1, 1]");
    return 0.5 * (1.0 - tau);
}

} // namespace rankstab
