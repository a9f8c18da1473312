#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace vsf::quad {

/// Gauss-Legendre rule on [-1, 1]. Nodes and weights are computed once by
/// Newton iteration on the Legendre polynomial rather than transcribed from
/// tables.
struct GlRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GlRule make_gl_rule(std::size_t n) {
    GlRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

inline const GlRule& gl15() {
    static const GlRule rule = make_gl_rule(15);
    return rule;
}

template <typename F>
double gl(const F& f, double a, double b, const GlRule& rule = gl15()) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

namespace detail {

template <typename F>
double adaptive_impl(const F& f, double a, double b, double whole, double rel_tol, double abs_tol,
                     int depth) {
    const double mid = 0.5 * (a + b);
    const double left = gl(f, a, mid);
    const double right = gl(f, mid, b);
    const double refined = left + right;
    const double err = std::fabs(refined - whole);
    if (depth <= 0 || err <= std::max(abs_tol, rel_tol * std::fabs(refined)))
        return refined;
    return adaptive_impl(f, a, mid, left, rel_tol, 0.5 * abs_tol, depth - 1) +
           adaptive_impl(f, mid, b, right, rel_tol, 0.5 * abs_tol, depth - 1);
}

}  // namespace detail

/// Adaptive integration by interval halving with a 15-point rule per panel.
/// Integrands are expected to be piecewise smooth (callers remove power-law
/// singularities by substitution before integrating).
template <typename F>
double adaptive(const F& f, double a, double b, double rel_tol = 1e-10, double abs_tol = 0.0,
                int max_depth = 48) {
    if (a == b) return 0.0;
    return detail::adaptive_impl(f, a, b, gl(f, a, b), rel_tol, abs_tol, max_depth);
}

}  // namespace vsf::quad
