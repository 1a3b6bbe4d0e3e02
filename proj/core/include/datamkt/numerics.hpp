#pragma once

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>

namespace datamkt {

/// Accuracy knobs shared by quadrature and root finding.
struct Tolerances {
    double quad_abs = 1e-9;
    double quad_rel = 1e-9;
    double root_x = 1e-10;
    int max_depth = 50;

    void validate() const {
        if (quad_abs <= 0 || quad_rel <= 0 || root_x <= 0)
            throw std::invalid_argument("Tolerances: all tolerances must be strictly positive");
        if (max_depth < 10)
            throw std::invalid_argument("Tolerances: max_depth must be at least 10");
    }
};

struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown by find_root when f(a) and f(b) have the same sign. Callers that
/// probe for interior crossings catch this and fall back to a boundary case.
struct NoRootBracket : NumericsError {
    explicit NoRootBracket(const std::string& msg) : NumericsError(msg) {}
};

namespace detail {

inline void check_finite(double fx, double x) {
    if (!std::isfinite(fx))
        throw NumericsError("integrand is not finite at x = " + std::to_string(x));
}

template <std::invocable<double> F>
double simpson_recurse(F& f, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth, int max_depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    check_finite(flm, lm);
    check_finite(frm, rm);
    const double h = b - a;
    const double left = (h / 12.0) * (fa + 4.0 * flm + fm);
    const double right = (h / 12.0) * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    if (depth >= max_depth)
        throw NumericsError("adaptive quadrature exceeded max_depth near x = " + std::to_string(m));
    return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth) +
           simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth);
}

} // namespace detail

/// Adaptive Simpson quadrature of f over [a, b]. The estimate is refined until
/// the local error indicator drops below max(quad_abs, quad_rel * |estimate|).
/// An empty interval integrates to exactly zero.
template <std::invocable<double> F>
double integrate(F&& f, double a, double b, const Tolerances& tol = Tolerances{}) {
    if (!(a <= b))
        throw std::invalid_argument("integrate: requires a <= b");
    if (a == b)
        return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    detail::check_finite(fa, a);
    detail::check_finite(fb, b);
    detail::check_finite(fm, m);
    const double whole = ((b - a) / 6.0) * (fa + 4.0 * fm + fb);
    const double eps = std::max(tol.quad_abs, tol.quad_rel * std::abs(whole));
    return detail::simpson_recurse(f, a, b, fa, fm, fb, whole, eps, 0, tol.max_depth);
}

/// Bracketed root finding: bisection with secant acceleration. The bracket is
/// preserved at every step, so the result is within tol.root_x of a sign
/// change even when f is nearly flat around the root.
template <std::invocable<double> F>
double find_root(F&& f, double a, double b, const Tolerances& tol = Tolerances{}) {
    if (!(a <= b))
        throw std::invalid_argument("find_root: requires a <= b");
    double fa = f(a);
    if (fa == 0.0)
        return a;
    double fb = f(b);
    if (fb == 0.0)
        return b;
    if (!std::isfinite(fa) || !std::isfinite(fb))
        throw NumericsError("find_root: endpoint value is not finite");
    if (fa * fb > 0.0)
        throw NoRootBracket("find_root: no sign change on [" + std::to_string(a) + ", " +
                            std::to_string(b) + "]");

    for (int iter = 0; iter < 200 && (b - a) > tol.root_x; ++iter) {
        double x = 0.5 * (a + b);
        // Secant candidate, accepted only if it stays safely inside the bracket.
        const double denom = fb - fa;
        if (denom != 0.0) {
            const double s = a - fa * (b - a) / denom;
            const double guard = 0.01 * (b - a);
            if (s > a + guard && s < b - guard)
                x = s;
        }
        const double fx = f(x);
        if (!std::isfinite(fx))
            throw NumericsError("find_root: f is not finite at x = " + std::to_string(x));
        if (fx == 0.0)
            return x;
        if (fa * fx < 0.0) {
            b = x;
            fb = fx;
        } else {
            a = x;
            fa = fx;
        }
    }
    return 0.5 * (a + b);
}

enum class ScanDirection { Increasing, NonIncreasing };

/// Outcome of a monotonicity scan. On failure, carries the first adjacent
/// pair of abscissae that violates the requested direction.
struct ScanResult {
    bool pass = true;
    double x_lo = 0.0, x_hi = 0.0;
    double f_lo = 0.0, f_hi = 0.0;
};

/// Samples f on n+1 uniform points of [a, b] and checks the direction.
/// Increasing demands a strict rise of more than 1e-12 per step; non-increasing
/// rejects any rise at all.
template <std::invocable<double> F>
ScanResult monotone_scan(F&& f, double a, double b, int n, ScanDirection dir) {
    if (n < 8)
        throw std::invalid_argument("monotone_scan: requires n >= 8");
    if (!(a <= b))
        throw std::invalid_argument("monotone_scan: requires a <= b");
    constexpr double strict_margin = 1e-12;
    double x_prev = a;
    double f_prev = f(a);
    detail::check_finite(f_prev, a);
    for (int i = 1; i <= n; ++i) {
        const double x = a + (b - a) * static_cast<double>(i) / n;
        const double fx = f(x);
        detail::check_finite(fx, x);
        const bool bad = (dir == ScanDirection::Increasing) ? (fx - f_prev <= strict_margin)
                                                            : (fx > f_prev);
        if (bad)
            return ScanResult{false, x_prev, x, f_prev, fx};
        x_prev = x;
        f_prev = fx;
    }
    return ScanResult{};
}

} // namespace datamkt
