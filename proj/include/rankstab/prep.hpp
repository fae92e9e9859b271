#pragma once

// Target-transform selection (skewness minimization over the candidate set
// identity, log, log1p, cbrt, arcsinh, signed-log) and the capped
// downsampling protocol: uniform without replacement for regression,
// per-class proportional allocation with largest-remainder rounding for
// classification. Every non-identity transform is strictly increasing on
// its valid domain, so rank-based statistics are unchanged downstream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rankstab/errors.hpp"
#include "rankstab/rng.hpp"

namespace rankstab {

enum class TransformKind { identity, log_, log1p_, cbrt_, arcsinh_, signed_log };

inline const char* transform_name(TransformKind k) {
    switch (k) {
        case TransformKind::identity: return "identity";
        case TransformKind::log_: return "log";
        case TransformKind::log1p_: return "log1p";
        case TransformKind::cbrt_: return "cbrt";
        case TransformKind::arcsinh_: return "arcsinh";
        case TransformKind::signed_log: return "signed_log";
    }
    return "?";
}

struct TargetTransform {
    TransformKind kind = TransformKind::identity;
    double fitted_skewness = 0.0;  // |skewness| of the transformed data
    bool constant_input = false;   // degenerate: selection had no information
};

// Adjusted Fisher-Pearson standardized third moment,
//   G1 = m3 / m2^(3/2) * sqrt(n(n-1)) / (n-2).
inline double sample_skewness(const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (n < 3) throw validation_error("sample_skewness: needs n >= 3");
    double mean = 0.0;
    for (double v : y) {
        if (!std::isfinite(v)) throw validation_error("sample_skewness: non-finite value");
        mean += v;
    }
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0;
    for (double v : y) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    if (m2 <= 0.0) throw numeric_error("sample_skewness: zero variance");
    const double nn = static_cast<double>(n);
    return m3 / std::pow(m2, 1.5) * std::sqrt(nn * (nn - 1.0)) / (nn - 2.0);
}

inline bool transform_valid_for(TransformKind kind, const std::vector<double>& y) {
    switch (kind) {
        case TransformKind::log_:
            return std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; });
        case TransformKind::log1p_:
            return std::all_of(y.begin(), y.end(), [](double v) { return v > -1.0; });
        default:
            return true;
    }
}

inline double apply_transform_value(TransformKind kind, double v) {
    switch (kind) {
        case TransformKind::identity: return v;
        case TransformKind::log_:
            if (!(v > 0.0)) throw validation_error("apply_transform: log needs y > 0");
            return std::log(v);
        case TransformKind::log1p_:
            if (!(v > -1.0)) throw validation_error("apply_transform: log1p needs y > -1");
            return std::log1p(v);
        case TransformKind::cbrt_: return std::cbrt(v);  // real odd root
        case TransformKind::arcsinh_: return std::asinh(v);
        case TransformKind::signed_log: {
            const double m = std::log1p(std::fabs(v));
            return v < 0 ? -m : m;
        }
    }
    throw validation_error("apply_transform: unknown transform");
}

inline std::vector<double> apply_transform(const TargetTransform& t, const std::vector<double>& y) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = apply_transform_value(t.kind, y[i]);
    return out;
}

// Evaluates |sample_skewness(T(y))| for every domain-valid candidate and
// returns the argmin; ties break by candidate-list order with identity
// first. A constant input returns identity with skewness 0, flagged.
inline TargetTransform select_target_transform(const std::vector<double>& y) {
    if (y.size() < 3) throw validation_error("select_target_transform: needs n >= 3");
    const bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
    if (constant) return TargetTransform{TransformKind::identity, 0.0, true};

    constexpr TransformKind candidates[] = {TransformKind::identity,  TransformKind::log_,
                                            TransformKind::log1p_,    TransformKind::cbrt_,
                                            TransformKind::arcsinh_,  TransformKind::signed_log};
    TargetTransform best;
    double best_score = std::numeric_limits<double>::infinity();
    for (TransformKind kind : candidates) {
        if (!transform_valid_for(kind, y)) continue;
        std::vector<double> t(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) t[i] = apply_transform_value(kind, y[i]);
        double score;
        try {
            score = std::fabs(sample_skewness(t));
        } catch (const numeric_error&) {
            continue;  // transform collapsed the data; not a usable candidate
        }
        if (score < best_score) {
            best_score = score;
            best = TargetTransform{kind, score, false};
        }
    }
    if (!std::isfinite(best_score))
        throw numeric_error("select_target_transform: no candidate produced a finite skewness");
    return best;
}

// Index selection under a row cap. Below the cap: identity. Above it:
// uniform without replacement (no labels) or per-class proportional
// allocation with largest-remainder rounding (labels given; ties break by
// ascending class label). Output indices are sorted ascending.
inline std::vector<std::size_t> downsample(std::size_t row_count,
                                           const std::optional<std::vector<std::string>>& labels,
                                           std::size_t cap, std::uint64_t seed) {
    if (cap < 1) throw validation_error("downsample: cap must be >= 1");
    if (row_count == 0) throw validation_error("downsample: empty input");
    if (labels && labels->size() != row_count)
        throw validation_error("downsample: labels do not match row count");

    std::vector<std::size_t> out;
    if (row_count <= cap) {
        out.resize(row_count);
        for (std::size_t i = 0; i < row_count; ++i) out[i] = i;
        return out;
    }

    CounterRng rng(seed, 0);
    if (!labels) {
        rng.sample_indices(row_count, cap, out);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::map<std::string, std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < row_count; ++i) classes[(*labels)[i]].push_back(i);

    // largest-remainder allocation of exactly `cap` rows
    struct Alloc {
        const std::string* label;
        std::size_t base;
        double remainder;
        std::size_t order;
    };
    std::vector<Alloc> alloc;
    std::size_t assigned = 0;
    std::size_t order = 0;
    for (const auto& [label, rows] : classes) {
        const double exact = static_cast<double>(cap) * static_cast<double>(rows.size()) /
                             static_cast<double>(row_count);
        const std::size_t base = static_cast<std::size_t>(std::floor(exact));
        alloc.push_back({&label, base, exact - static_cast<double>(base), order++});
        assigned += base;
    }
    std::vector<std::size_t> by_remainder(alloc.size());
    std::iota(by_remainder.begin(), by_remainder.end(), 0);
    std::sort(by_remainder.begin(), by_remainder.end(), [&](std::size_t a, std::size_t b) {
        if (alloc[a].remainder != alloc[b].remainder) return alloc[a].remainder > alloc[b].remainder;
        return alloc[a].order < alloc[b].order;  // class label order (map is sorted)
    });
    for (std::size_t i = 0; assigned < cap; ++i) {
        ++alloc[by_remainder[i % alloc.size()]].base;
        ++assigned;
    }

    for (const auto& a : alloc) {
        const std::vector<std::size_t>& rows = classes[*a.label];
        std::vector<std::size_t> pick;
        rng.sample_indices(rows.size(), std::min(a.base, rows.size()), pick);
        for (std::size_t p : pick) out.push_back(rows[p]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline constexpr std::size_t kDefaultRowCap = 75000;

} // namespace rankstab
