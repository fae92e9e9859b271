#include <catch2/catch_amalgamated.hpp>

#include "rankstab/stability.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace rankstab;

namespace {

ScoreMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    ScoreMatrix m;
    const std::size_t k = rows.front().size();
    for (std::size_t p = 0; p < k; ++p) m.pipeline_ids.push_back("p" + std::to_string(p + 1));
    for (std::size_t d = 0; d < rows.size(); ++d) {
        m.dataset_ids.push_back("d" + std::to_string(d + 1));
        for (double v : rows[d]) m.scores.push_back(v);
    }
    return m;
}

std::vector<StabilityPoint> noiseless_points(double c, double a,
                                             const std::vector<std::int64_t>& ns,
                                             double se = 0.0) {
    std::vector<StabilityPoint> pts;
    for (std::int64_t n : ns) {
        const double d = c / std::sqrt(static_cast<double>(n)) * std::exp(-a * n);
        pts.push_back({n, 1.0 - d, se});
    }
    return pts;
}

} // namespace

TEST_CASE("disjoint_subset_tau: consistent matrix gives tau 1, SE 0") {
    std::vector<std::vector<double>> rows;
    for (int d = 0; d < 12; ++d)
        rows.push_back({3.0 + d * 0.01, 2.0 + d * 0.01, 1.0 + d * 0.01});  // same order per row
    const ScoreMatrix m = matrix_from_rows(rows);
    const McEstimate est = disjoint_subset_tau(m, 4, 50, 9);
    CHECK(est.mean == 1.0);
    CHECK(est.std_error == 0.0);
}

TEST_CASE("disjoint_subset_tau enforces the half-size cap") {
    std::vector<std::vector<double>> rows(10, {1.0, 2.0, 3.0});
    const ScoreMatrix m = matrix_from_rows(rows);
    CHECK_NOTHROW(disjoint_subset_tau(m, 5, 3, 1));  // subset_size = N/2 is the maximum
    CHECK_THROWS_AS(disjoint_subset_tau(m, 6, 3, 1), validation_error);
}

TEST_CASE("disjoint_subset_tau approaches the closed form on simulated data") {
    // large pool so two disjoint subsets behave like independent benchmarks
    PerformanceModel model;
    model.mu = {0.0, 0.35, 0.8};
    model.sigma = 1.0;
    const ScoreMatrix pool = simulate_scores(model, 400, 314);
    const std::int64_t subset = 16;
    const McEstimate est = disjoint_subset_tau(pool, subset, 3000, 62);
    const double expected = expected_tau_two_benchmarks(gap_summary(model), subset);
    CHECK(std::fabs(est.mean - expected) <= 3.5 * std::max(est.std_error, 1e-3));
}

TEST_CASE("disjoint_subset_tau: parallel equals sequential") {
    PerformanceModel model;
    model.mu = {0.0, 0.5};
    model.sigma = 1.0;
    const ScoreMatrix pool = simulate_scores(model, 60, 5);
    const McEstimate seq = disjoint_subset_tau(pool, 10, 500, 21, 1);
    const McEstimate par = disjoint_subset_tau(pool, 10, 500, 21, 4);
    CHECK(seq.mean == par.mean);
    CHECK(seq.std_error == par.std_error);
}

TEST_CASE("fit_stability_curve recovers noiseless parameters") {
    for (auto [c, a] : std::vector<std::pair<double, double>>{{0.5, 0.02}, {1.2, 0.05}, {3.0, 0.1}}) {
        const StabilityFit fit = fit_stability_curve(noiseless_points(c, a, {8, 16, 24, 32, 48}));
        CAPTURE(c, a);
        CHECK(fit.c == Catch::Approx(c).epsilon(1e-6));
        CHECK(fit.a == Catch::Approx(a).epsilon(1e-6));
    }
}

TEST_CASE("fit_stability_curve: fitted disagreement is monotone nonincreasing") {
    const StabilityFit fit = fit_stability_curve(noiseless_points(1.2, 0.05, {8, 16, 24, 32}));
    double prev = fit.disagreement(1.0);
    for (double n = 2.0; n <= 300.0; n += 1.0) {
        const double cur = fit.disagreement(n);
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
}

TEST_CASE("fit_stability_curve: an extra exact point changes nothing") {
    const StabilityFit base = fit_stability_curve(noiseless_points(1.2, 0.05, {8, 16, 24, 32, 48}));
    const StabilityFit more =
        fit_stability_curve(noiseless_points(1.2, 0.05, {8, 16, 24, 32, 48, 96}));
    CHECK(base.c == Catch::Approx(more.c).epsilon(1e-6));
    CHECK(base.a == Catch::Approx(more.a).epsilon(1e-6));
}

TEST_CASE("fit_stability_curve: rescaling all SEs leaves parameters unchanged") {
    std::vector<StabilityPoint> pts = noiseless_points(0.9, 0.03, {8, 16, 24, 40}, 0.01);
    pts[1].tau_mean += 0.004;  // perturb so weights matter
    pts[2].tau_se = 0.03;
    pts[3].tau_se = 0.002;
    const StabilityFit fit1 = fit_stability_curve(pts);
    for (auto& p : pts) p.tau_se *= 7.5;
    const StabilityFit fit2 = fit_stability_curve(pts);
    CHECK(fit1.c == Catch::Approx(fit2.c).epsilon(1e-9));
    CHECK(fit1.a == Catch::Approx(fit2.a).epsilon(1e-9));
}

TEST_CASE("fit_stability_curve input validation") {
    CHECK_THROWS_AS(fit_stability_curve(noiseless_points(1.0, 0.1, {8, 16})), validation_error);
    std::vector<StabilityPoint> saturated{{8, 1.0, 0.0}, {16, 1.0, 0.0}, {24, 1.0, 0.0}};
    CHECK_THROWS_AS(fit_stability_curve(saturated), numeric_error);
}

TEST_CASE("extrapolate_oracle reproduces the paper's arithmetic anchors") {
    // tau_two(108) = 0.90  ->  tau_oracle(108) = 0.95
    StabilityFit fit;
    fit.a = 0.0;
    fit.c = 0.1 * std::sqrt(108.0);
    const OracleExtrapolation at108 = extrapolate_oracle(fit, 108);
    CHECK(at108.tau_two_benchmarks == Catch::Approx(0.90).margin(1e-12));
    CHECK(at108.tau_oracle == Catch::Approx(0.95).margin(1e-12));

    // tau_two(54) = 0.86 -> disagreement 0.07 -> oracle disagreement 0.035
    StabilityFit fit54;
    fit54.a = 0.0;
    fit54.c = 0.14 * std::sqrt(54.0);
    const OracleExtrapolation at54 = extrapolate_oracle(fit54, 54);
    CHECK(disagreement_fraction(at54.tau_two_benchmarks) * 2.0 == Catch::Approx(0.14).margin(1e-12));
    CHECK(1.0 - at54.tau_oracle == Catch::Approx(0.035).margin(1e-12));

    StabilityFit zero;  // a = 0, C = 0
    const OracleExtrapolation flat = extrapolate_oracle(zero, 10);
    CHECK(flat.tau_two_benchmarks == 1.0);
    CHECK(flat.tau_oracle == 1.0);
}

TEST_CASE("extrapolate_oracle: factor two exact for arbitrary fits") {
    std::mt19937 gen(13);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        StabilityFit fit;
        fit.c = 0.01 + 3.0 * unif(gen);
        fit.a = 0.2 * unif(gen);
        const std::int64_t n = 1 + static_cast<std::int64_t>(200 * unif(gen));
        const OracleExtrapolation e = extrapolate_oracle(fit, n);
        CHECK((1.0 - e.tau_oracle) == 0.5 * (1.0 - e.tau_two_benchmarks));
    }
}

TEST_CASE("leave_one_group_out: single group covering everything") {
    std::vector<std::vector<double>> rows;
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int d = 0; d < 8; ++d) rows.push_back({unif(gen), unif(gen), unif(gen)});
    const ScoreMatrix m = matrix_from_rows(rows);
    std::map<std::string, std::string> groups;
    for (const auto& id : m.dataset_ids) groups[id] = "all";
    const std::vector<GroupStability> out = leave_one_group_out(m, groups, 50, 4);
    REQUIRE(out.size() == 1);
    CHECK(out[0].tau == 1.0);
    CHECK(out[0].inside_band);
}

TEST_CASE("leave_one_group_out flags an adversarial group") {
    // 16 datasets follow one ranking; 4 reverse it
    std::vector<std::vector<double>> rows;
    for (int d = 0; d < 16; ++d) rows.push_back({5.0, 4.0, 3.0, 2.0, 1.0});
    for (int d = 0; d < 4; ++d) rows.push_back({1.0, 2.0, 3.0, 4.0, 5.0});
    const ScoreMatrix m = matrix_from_rows(rows);
    std::map<std::string, std::string> groups;
    for (std::size_t d = 0; d < m.n_datasets(); ++d)
        groups[m.dataset_ids[d]] = d < 16 ? "majority" : "reversal";

    const std::vector<GroupStability> out = leave_one_group_out(m, groups, 200, 8);
    REQUIRE(out.size() == 2);
    const GroupStability& majority = out[0].group_id == "majority" ? out[0] : out[1];
    const GroupStability& reversal = out[0].group_id == "reversal" ? out[0] : out[1];
    CHECK(majority.tau == 1.0);
    CHECK(reversal.tau == -1.0);
    CHECK(reversal.tau < reversal.null_low);
    CHECK_FALSE(reversal.inside_band);
}

TEST_CASE("leave_one_group_out: dataset order does not move the taus") {
    std::mt19937 gen(29);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::vector<double>> rows;
    for (int d = 0; d < 10; ++d) rows.push_back({unif(gen), unif(gen), unif(gen), unif(gen)});
    ScoreMatrix m = matrix_from_rows(rows);
    std::map<std::string, std::string> groups;
    for (std::size_t d = 0; d < m.n_datasets(); ++d)
        groups[m.dataset_ids[d]] = d % 3 == 0 ? "a" : d % 3 == 1 ? "b" : "c";

    const std::vector<GroupStability> before = leave_one_group_out(m, groups, 40, 17);

    // permute rows (ids travel with their rows)
    std::vector<std::size_t> perm(m.n_datasets());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    ScoreMatrix shuffled;
    shuffled.pipeline_ids = m.pipeline_ids;
    for (std::size_t d : perm) {
        shuffled.dataset_ids.push_back(m.dataset_ids[d]);
        for (std::size_t p = 0; p < m.n_pipelines(); ++p)
            shuffled.scores.push_back(m.at(d, p));
    }
    const std::vector<GroupStability> after = leave_one_group_out(shuffled, groups, 40, 17);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(before[i].group_id == after[i].group_id);
        CHECK(before[i].tau == after[i].tau);
        CHECK(before[i].null_low == after[i].null_low);  // canonical-id sampling
        CHECK(before[i].null_high == after[i].null_high);
    }
}

TEST_CASE("leave_one_group_out validation") {
    const ScoreMatrix m = matrix_from_rows({{1.0, 2.0}, {2.0, 1.0}});
    std::map<std::string, std::string> partial{{"d1", "a"}};
    CHECK_THROWS_AS(leave_one_group_out(m, partial, 10, 1), validation_error);
    std::map<std::string, std::string> full{{"d1", "a"}, {"d2", "b"}};
    CHECK_THROWS_AS(leave_one_group_out(m, full, 1, 1), validation_error);
}

TEST_CASE("metafeature_split_tau splits on percentile tails") {
    // feature: low datasets rank one way, high datasets reverse
    std::vector<std::vector<double>> rows;
    for (int d = 0; d < 6; ++d) rows.push_back({3.0, 2.0, 1.0});
    for (int d = 0; d < 6; ++d) rows.push_back({1.0, 2.0, 3.0});
    const ScoreMatrix m = matrix_from_rows(rows);
    std::map<std::string, double> feature;
    for (std::size_t d = 0; d < m.n_datasets(); ++d)
        feature[m.dataset_ids[d]] = d < 6 ? 0.1 * static_cast<double>(d) : 10.0 + d;

    const MetafeatureSplit split = metafeature_split_tau(m, feature, 1.0 / 3.0);
    CHECK(split.tau == -1.0);
    CHECK_FALSE(split.low_ids.empty());
    CHECK_FALSE(split.high_ids.empty());

    // identical structure in both tails
    std::vector<std::vector<double>> same(12, {3.0, 2.0, 1.0});
    const MetafeatureSplit unity = metafeature_split_tau(matrix_from_rows(same), feature, 0.25);
    CHECK(unity.tau == 1.0);
}

TEST_CASE("metafeature_split_tau validation") {
    const ScoreMatrix m = matrix_from_rows({{1.0, 2.0}, {2.0, 1.0}, {1.0, 2.0}});
    std::map<std::string, double> constant{{"d1", 1.0}, {"d2", 1.0}, {"d3", 1.0}};
    CHECK_THROWS_AS(metafeature_split_tau(m, constant, 1.0 / 3.0), validation_error);
    std::map<std::string, double> ok{{"d1", 1.0}, {"d2", 2.0}, {"d3", 3.0}};
    CHECK_THROWS_AS(metafeature_split_tau(m, ok, 0.0), validation_error);
    CHECK_THROWS_AS(metafeature_split_tau(m, ok, 0.7), validation_error);
}
