#pragma once

// Independent test oracles. These deliberately avoid the implementation
// paths they check: erf comes from adaptive quadrature of the defining
// integral, Kendall-tau from direct O(k^2) sign products, CDFs from
// quadrature of their densities.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracles {

// Adaptive Simpson on [a, b] to absolute tolerance tol.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 60) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fhi, double fmid, double eps,
            int d) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::fabs(left + right - whole) < 15.0 * eps)
            return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, fmid, flm, 0.5 * eps, d - 1) +
               rec(mid, hi, fmid, fhi, frm, 0.5 * eps, d - 1);
    };
    return rec(a, b, fa, fb, fm, tol, depth);
}

// erf by quadrature of (2/sqrt(pi)) exp(-t^2) on [0, x].
inline double erf_quadrature(double x) {
    if (x == 0.0) return 0.0;
    const double ax = std::fabs(x);
    const double two_over_sqrt_pi = 1.1283791670955125739;
    const double v = adaptive_simpson([&](double t) { return std::exp(-t * t); }, 0.0,
                                      std::min(ax, 9.0), 1e-14) *
                     two_over_sqrt_pi;
    const double r = ax >= 9.0 ? 1.0 : v;  // tail below 1e-35 past 9
    return x < 0 ? -r : r;
}

inline double normal_cdf_quadrature(double x) {
    return 0.5 * (1.0 + erf_quadrature(x / std::sqrt(2.0)));
}

// Kendall tau-b by direct O(k^2) pair counting over rank vectors.
inline double kendall_tau_bruteforce(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t k = a.size();
    long long concordant_minus_discordant = 0;
    long long tied_a = 0, tied_b = 0;
    const long long n0 = static_cast<long long>(k) * (k - 1) / 2;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da == 0.0) ++tied_a;
            if (db == 0.0) ++tied_b;
            const int sa = da > 0 ? 1 : da < 0 ? -1 : 0;
            const int sb = db > 0 ? 1 : db < 0 ? -1 : 0;
            concordant_minus_discordant += sa * sb;
        }
    }
    return static_cast<double>(concordant_minus_discordant) /
           (std::sqrt(static_cast<double>(n0 - tied_a)) *
            std::sqrt(static_cast<double>(n0 - tied_b)));
}

// Student-t CDF by quadrature of the density.
inline double student_t_cdf_quadrature(double t, double df) {
    const auto density = [df](double x) {
        return std::pow(1.0 + x * x / df, -0.5 * (df + 1.0));
    };
    // normalization 1/(sqrt(df) B(1/2, df/2)) obtained by integrating the
    // unnormalized density over a wide symmetric window
    const double width = 60.0 * std::sqrt(df);
    const double total = adaptive_simpson(density, -width, width, 1e-13);
    if (t <= -width) return 0.0;
    if (t >= width) return 1.0;
    return adaptive_simpson(density, -width, t, 1e-13) / total;
}

// Chi-square survival by quadrature of the density on [x, far tail].
inline double chi2_sf_quadrature(double x, double df) {
    const auto density = [df](double u) {
        return std::pow(u, 0.5 * df - 1.0) * std::exp(-0.5 * u);
    };
    const double hi = x + 80.0 + 10.0 * df;
    const double lo_total = df >= 2.0 ? 0.0 : 1e-12;  // integrable singularity at 0 for df < 2
    const double total = adaptive_simpson(density, lo_total, hi, 1e-13);
    if (x <= lo_total) return 1.0;
    return adaptive_simpson(density, x, hi, 1e-13) / total;
}

} // namespace oracles
