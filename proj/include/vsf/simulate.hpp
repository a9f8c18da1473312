#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vsf/field.hpp"
#include "vsf/parallel.hpp"
#include "vsf/quadrature.hpp"
#include "vsf/rng.hpp"

namespace vsf {

// Generative field models. The long-memory spectral densities are the power
// laws below taken literally on all of [-pi, pi]^2; their exponent ranges are
// the integrability conditions.
struct WhiteNoise {};
struct SeparableAr {
    double a = 0.5;  // 0 < a < 1
};
struct ProductLm {
    double alpha1 = -0.5;  // -1 < alpha1 < 0
    double alpha2 = -0.5;  // -1 < alpha2 < 0
};
struct IsotropicLm {
    double alpha = -1.0;  // -2 < alpha < 0
};
struct OneDirectionLm {
    double alpha = -0.5;  // -1 < alpha < 0
    std::int64_t k = 0;   // singular line x1 + k*x2 = 0
};

using ModelSpec = std::variant<WhiteNoise, SeparableAr, ProductLm, IsotropicLm, OneDirectionLm>;

inline void validate_model(const ModelSpec& model) {
    if (const auto* ar = std::get_if<SeparableAr>(&model)) {
        if (!(ar->a > 0.0 && ar->a < 1.0))
            throw std::invalid_argument("model ar: parameter a must lie in (0, 1)");
    } else if (const auto* p = std::get_if<ProductLm>(&model)) {
        if (!(p->alpha1 > -1.0 && p->alpha1 < 0.0))
            throw std::invalid_argument("model product: a1 must lie in (-1, 0)");
        if (!(p->alpha2 > -1.0 && p->alpha2 < 0.0))
            throw std::invalid_argument("model product: a2 must lie in (-1, 0)");
    } else if (const auto* iso = std::get_if<IsotropicLm>(&model)) {
        if (!(iso->alpha > -2.0 && iso->alpha < 0.0))
            throw std::invalid_argument("model iso: a must lie in (-2, 0)");
    } else if (const auto* one = std::get_if<OneDirectionLm>(&model)) {
        if (!(one->alpha > -1.0 && one->alpha < 0.0))
            throw std::invalid_argument("model oneline: a must lie in (-1, 0)");
    }
}

inline bool is_long_memory(const ModelSpec& model) {
    return std::holds_alternative<ProductLm>(model) || std::holds_alternative<IsotropicLm>(model) ||
           std::holds_alternative<OneDirectionLm>(model);
}

/// Partial-sum growth exponent for the long-memory models; nothing for the
/// short-memory ones.
inline std::optional<double> gamma_of(const ModelSpec& model) {
    if (const auto* p = std::get_if<ProductLm>(&model))
        return 1.0 - (p->alpha1 + p->alpha2) / 2.0;
    if (const auto* iso = std::get_if<IsotropicLm>(&model)) return 1.0 - iso->alpha / 2.0;
    if (const auto* one = std::get_if<OneDirectionLm>(&model)) return 1.0 - one->alpha / 2.0;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Model spec strings: wn | ar:a=0.5 | product:a1=-0.5,a2=-0.5 | iso:a=-1 |
// oneline:a=-0.5,k=-1. Used by the CLI and embedded in report metadata.
// ---------------------------------------------------------------------------

namespace detail {

inline double parse_param_double(const std::string& token, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw std::invalid_argument("model spec: bad number in '" + token + "'");
    return v;
}

inline std::vector<std::pair<std::string, std::string>> parse_param_list(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t next = text.find(',', pos);
        const std::string tok = text.substr(pos, next == std::string::npos ? next : next - pos);
        const std::size_t eq = tok.find('=');
        if (tok.empty() || eq == std::string::npos || eq == 0)
            throw std::invalid_argument("model spec: bad parameter token '" + tok + "'");
        out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

}  // namespace detail

inline ModelSpec parse_model(const std::string& text) {
    const std::size_t colon = text.find(':');
    const std::string head = text.substr(0, colon);
    std::vector<std::pair<std::string, std::string>> params;
    if (colon != std::string::npos) params = detail::parse_param_list(text.substr(colon + 1));

    auto find = [&](const char* key) -> const std::string& {
        for (const auto& [k, v] : params)
            if (k == key) return v;
        throw std::invalid_argument("model spec '" + text + "': missing parameter '" + key + "'");
    };
    auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : params) {
            bool ok = false;
            for (const char* a : allowed)
                if (k == a) ok = true;
            if (!ok)
                throw std::invalid_argument("model spec '" + text + "': unknown parameter '" + k +
                                            "'");
        }
    };

    ModelSpec model;
    if (head == "wn") {
        reject_unknown({});
        model = WhiteNoise{};
    } else if (head == "ar") {
        reject_unknown({"a"});
        model = SeparableAr{detail::parse_param_double(text, find("a"))};
    } else if (head == "product") {
        reject_unknown({"a1", "a2"});
        model = ProductLm{detail::parse_param_double(text, find("a1")),
                          detail::parse_param_double(text, find("a2"))};
    } else if (head == "iso") {
        reject_unknown({"a"});
        model = IsotropicLm{detail::parse_param_double(text, find("a"))};
    } else if (head == "oneline") {
        reject_unknown({"a", "k"});
        const double kd = detail::parse_param_double(text, find("k"));
        if (kd != std::floor(kd))
            throw std::invalid_argument("model spec '" + text + "': k must be an integer");
        model = OneDirectionLm{detail::parse_param_double(text, find("a")),
                               static_cast<std::int64_t>(kd)};
    } else {
        throw std::invalid_argument("model spec: unknown model '" + head + "'");
    }
    validate_model(model);
    return model;
}

inline std::string format_model(const ModelSpec& model) {
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    if (std::holds_alternative<WhiteNoise>(model)) return "wn";
    if (const auto* ar = std::get_if<SeparableAr>(&model)) return "ar:a=" + num(ar->a);
    if (const auto* p = std::get_if<ProductLm>(&model))
        return "product:a1=" + num(p->alpha1) + ",a2=" + num(p->alpha2);
    if (const auto* iso = std::get_if<IsotropicLm>(&model)) return "iso:a=" + num(iso->alpha);
    const auto& one = std::get<OneDirectionLm>(model);
    return "oneline:a=" + num(one.alpha) + ",k=" + std::to_string(one.k);
}

// ---------------------------------------------------------------------------
// Separable autoregressive field: (1 - a L1)(1 - a L2) X = noise, run on an
// enlarged grid with zero boundary; the trailing n x n block is returned.
// ---------------------------------------------------------------------------

inline Field simulate_ar(std::size_t n, double a, std::size_t burn_in, Rng& rng) {
    if (!(a > 0.0 && a < 1.0))
        throw std::invalid_argument("simulate_ar: parameter a must lie in (0, 1)");
    if (n == 0) throw std::invalid_argument("simulate_ar: n must be positive");
    const std::size_t m = n + burn_in;
    std::vector<double> x(m * m);
    const double a2 = a * a;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double v = rng.normal();
            if (i > 0) v += a * x[(i - 1) * m + j];
            if (j > 0) v += a * x[i * m + j - 1];
            if (i > 0 && j > 0) v -= a2 * x[(i - 1) * m + j - 1];
            x[i * m + j] = v;
        }
    std::vector<double> out(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i * n + j] = x[(i + burn_in) * m + j + burn_in];
    return Field({n, n}, std::move(out));
}

// ---------------------------------------------------------------------------
// Spectral densities and exact sampling from the normalized spectral measure.
// ---------------------------------------------------------------------------

/// Unnormalized spectral density at a point of [-pi, pi]^2. Returns +infinity
/// exactly on the singular set.
inline double spectral_density(const ModelSpec& model, double x1, double x2) {
    if (const auto* p = std::get_if<ProductLm>(&model)) {
        if (x1 == 0.0 || x2 == 0.0) return std::numeric_limits<double>::infinity();
        return std::pow(std::fabs(x1), p->alpha1) * std::pow(std::fabs(x2), p->alpha2);
    }
    if (const auto* iso = std::get_if<IsotropicLm>(&model)) {
        const double r2 = x1 * x1 + x2 * x2;
        if (r2 == 0.0) return std::numeric_limits<double>::infinity();
        return std::pow(r2, iso->alpha / 2.0);
    }
    if (const auto* one = std::get_if<OneDirectionLm>(&model)) {
        const double u = std::fabs(x1 + static_cast<double>(one->k) * x2);
        if (u == 0.0) return std::numeric_limits<double>::infinity();
        return std::pow(u, one->alpha);
    }
    throw std::invalid_argument("spectral_density: not a long-memory model");
}

namespace detail {

// One-direction helpers, beta = alpha + 1 in (0, 1).
//   J(c)  = integral over [-pi, pi] of |x + c|^alpha dx   (even in c)
//   G(c)  = integral of J from 0 to c                     (odd in c)
// Both are piecewise power functions, so the x2-marginal CDF is analytic and
// only the final inversion needs a root-find.
inline double oneline_j(double c, double beta) {
    c = std::fabs(c);
    if (c <= M_PI) return (std::pow(M_PI - c, beta) + std::pow(M_PI + c, beta)) / beta;
    return (std::pow(c + M_PI, beta) - std::pow(c - M_PI, beta)) / beta;
}

inline double oneline_g(double c, double beta) {
    const double g1 = beta + 1.0;
    const double mag =
        (std::pow(M_PI + std::fabs(c), g1) - std::pow(std::fabs(M_PI - std::fabs(c)), g1)) /
        (beta * g1);
    return c < 0.0 ? -mag : mag;
}

// Inverse CDF of the conditional |u|^alpha density on [c - pi, c + pi],
// split at the sign change of u.
inline double oneline_conditional(double c, double beta, double v) {
    const double j = oneline_j(c, beta);
    const double target = v * j * beta;
    double u;
    if (c > M_PI) {
        u = std::pow(std::pow(c - M_PI, beta) + target, 1.0 / beta);
    } else if (c < -M_PI) {
        u = -std::pow(std::pow(M_PI - c, beta) - target, 1.0 / beta);
    } else {
        const double neg_mass = std::pow(M_PI - c, beta);
        if (target <= neg_mass)
            u = -std::pow(neg_mass - target, 1.0 / beta);
        else
            u = std::pow(target - neg_mass, 1.0 / beta);
    }
    return std::clamp(u - c, -M_PI, M_PI);
}

}  // namespace detail

/// One exact draw from the normalized spectral measure.
///   product : per-axis inverse CDF, |x| = pi * U^{1/(alpha+1)}, random sign.
///   iso     : polar proposal on the circumscribed disk with radial density
///             proportional to r^{alpha+1}, rejecting points off the square.
///   oneline : x2 from its analytic marginal (bisection on the piecewise
///             power CDF), then x1 by piecewise inverse CDF given x2.
inline std::array<double, 2> sample_spectral_point(const ModelSpec& model, Rng& rng) {
    if (const auto* p = std::get_if<ProductLm>(&model)) {
        std::array<double, 2> out{};
        const double alphas[2] = {p->alpha1, p->alpha2};
        for (int i = 0; i < 2; ++i) {
            const double mag = M_PI * std::pow(rng.uniform01(), 1.0 / (alphas[i] + 1.0));
            out[i] = rng.uniform01() < 0.5 ? -mag : mag;
        }
        return out;
    }
    if (const auto* iso = std::get_if<IsotropicLm>(&model)) {
        const double r_max = M_PI * std::sqrt(2.0);
        const double exponent = 1.0 / (iso->alpha + 2.0);
        for (int attempt = 0; attempt < 10000; ++attempt) {
            const double r = r_max * std::pow(rng.uniform01(), exponent);
            const double theta = rng.uniform(0.0, 2.0 * M_PI);
            const double x1 = r * std::cos(theta);
            const double x2 = r * std::sin(theta);
            if (std::fabs(x1) <= M_PI && std::fabs(x2) <= M_PI) return {x1, x2};
        }
        throw std::runtime_error("sample_spectral_point: rejection cap exceeded (iso)");
    }
    if (const auto* one = std::get_if<OneDirectionLm>(&model)) {
        const double beta = one->alpha + 1.0;
        const double kd = static_cast<double>(one->k);
        double x2;
        if (one->k == 0) {
            x2 = rng.uniform(-M_PI, M_PI);
        } else {
            // CDF(t) proportional to G(k t) - G(-k pi), increasing for either
            // sign of k; invert by bisection.
            const double g_lo = detail::oneline_g(-kd * M_PI, beta);
            const double g_hi = detail::oneline_g(kd * M_PI, beta);
            const double target = g_lo + rng.uniform01() * (g_hi - g_lo);
            double lo = -M_PI, hi = M_PI;
            for (int iter = 0; iter < 80; ++iter) {
                const double mid = 0.5 * (lo + hi);
                const double val = detail::oneline_g(kd * mid, beta);
                const bool below = (kd > 0.0) ? (val < target) : (val > target);
                (below ? lo : hi) = mid;
            }
            x2 = 0.5 * (lo + hi);
        }
        const double x1 = detail::oneline_conditional(kd * x2, beta, rng.uniform01());
        return {x1, x2};
    }
    throw std::invalid_argument("sample_spectral_point: not a long-memory model");
}

// ---------------------------------------------------------------------------
// Total spectral mass and lag covariances by quadrature. Power-law
// singularities are removed by substitution (per-axis power transform,
// polar reduction, or the shear u = x1 + k x2), after which adaptive
// Gauss-Legendre applies.
// ---------------------------------------------------------------------------

/// Total spectral mass c_mu = integral of the density over [-pi, pi]^2.
inline double spectral_mass(const ModelSpec& model) {
    if (const auto* p = std::get_if<ProductLm>(&model)) {
        const double b1 = p->alpha1 + 1.0, b2 = p->alpha2 + 1.0;
        return (2.0 * std::pow(M_PI, b1) / b1) * (2.0 * std::pow(M_PI, b2) / b2);
    }
    if (const auto* iso = std::get_if<IsotropicLm>(&model)) {
        // Polar reduction: integral over the square of r^alpha equals
        // (1/(alpha+2)) * integral of R(theta)^{alpha+2}, R the boundary ray.
        const double e = iso->alpha + 2.0;
        const double seg = quad::adaptive(
            [e](double theta) { return std::pow(M_PI / std::cos(theta), e); }, 0.0, M_PI / 4.0,
            1e-12);
        return 8.0 * seg / e;
    }
    if (const auto* one = std::get_if<OneDirectionLm>(&model)) {
        const double beta = one->alpha + 1.0;
        if (one->k == 0) return 2.0 * M_PI * detail::oneline_j(0.0, beta);
        const double kabs = std::fabs(static_cast<double>(one->k));
        return 2.0 * detail::oneline_g(kabs * M_PI, beta) / kabs;
    }
    throw std::invalid_argument("spectral_mass: not a long-memory model");
}

/// Lag covariance of the target field: integral of cos(h . x) times the
/// density over [-pi, pi]^2. Serves as the oracle the simulated fields are
/// checked against.
inline double spectral_covariance(const ModelSpec& model, double h1, double h2) {
    // 1-D factor: integral over [-pi, pi] of cos(h x) |x|^alpha dx, via
    // x = t^{1/beta} which flattens the endpoint singularity.
    auto axis_factor = [](double h, double alpha) {
        const double beta = alpha + 1.0;
        const double upper = std::pow(M_PI, beta);
        const double inv_beta = 1.0 / beta;
        return 2.0 * inv_beta *
               quad::adaptive(
                   [h, inv_beta](double t) { return std::cos(h * std::pow(t, inv_beta)); }, 0.0,
                   upper, 1e-11);
    };

    if (const auto* p = std::get_if<ProductLm>(&model))
        return axis_factor(h1, p->alpha1) * axis_factor(h2, p->alpha2);

    if (const auto* iso = std::get_if<IsotropicLm>(&model)) {
        const double e = iso->alpha + 2.0;
        const double inv_e = 1.0 / e;
        auto inner = [&](double theta) {
            const double w = h1 * std::cos(theta) + h2 * std::sin(theta);
            const double r_max = M_PI / std::max(std::fabs(std::cos(theta)),
                                                 std::fabs(std::sin(theta)));
            return inv_e * quad::adaptive(
                               [w, inv_e](double t) { return std::cos(w * std::pow(t, inv_e)); },
                               0.0, std::pow(r_max, e), 1e-10);
        };
        double total = 0.0;
        for (int seg = 0; seg < 8; ++seg)  // split at the square's corner rays
            total += quad::adaptive(inner, seg * M_PI / 4.0, (seg + 1) * M_PI / 4.0, 1e-9);
        return total;
    }

    if (const auto* one = std::get_if<OneDirectionLm>(&model)) {
        const double alpha = one->alpha;
        const double beta = alpha + 1.0;
        if (one->k == 0) {
            const double f2 = h2 == 0.0 ? 2.0 * M_PI : 2.0 * std::sin(h2 * M_PI) / h2;
            return axis_factor(h1, alpha) * f2;
        }
        // Shear u = x1 + k x2, v = x2: the v-integral over each slice of the
        // parallelogram is analytic, leaving a 1-D u-integral with an
        // endpoint singularity handled by the power substitution.
        const double kd = static_cast<double>(one->k);
        const double coef = h2 - kd * h1;
        auto slice = [&](double u) {
            const double a = (u - M_PI) / kd, b = (u + M_PI) / kd;
            const double vlo = std::max(-M_PI, std::min(a, b));
            const double vhi = std::min(M_PI, std::max(a, b));
            if (vhi <= vlo) return 0.0;
            const double phase = h1 * u;
            if (coef == 0.0) return (vhi - vlo) * std::cos(phase);
            return (std::sin(phase + coef * vhi) - std::sin(phase + coef * vlo)) / coef;
        };
        const double u_max = (1.0 + std::fabs(kd)) * M_PI;
        const double upper = std::pow(u_max, beta);
        const double inv_beta = 1.0 / beta;
        auto half = [&](double sign) {
            return inv_beta * quad::adaptive(
                                  [&, sign](double t) {
                                      return slice(sign * std::pow(t, inv_beta));
                                  },
                                  0.0, upper, 1e-10);
        };
        return half(1.0) + half(-1.0);
    }

    throw std::invalid_argument("spectral_covariance: not a long-memory model");
}

// ---------------------------------------------------------------------------
// Spectral synthesis: X_{i,j} = sqrt(2 c_mu / N) * sum_k cos(Z1 i + Z2 j + phase),
// frequencies drawn from the normalized spectral measure, phases uniform.
// The amplitude makes the marginal variance equal the total spectral mass,
// so lag covariances match integral cos(h . x) f(x) dx exactly in expectation.
// ---------------------------------------------------------------------------

inline Field simulate_spectral(const ModelSpec& model, std::size_t n, std::size_t num_terms,
                               Rng& rng, unsigned jobs = 1) {
    if (!is_long_memory(model))
        throw std::invalid_argument("simulate_spectral: not a long-memory model");
    validate_model(model);
    if (num_terms < 100)
        throw std::invalid_argument("simulate_spectral: need at least 100 terms");
    if (n == 0) throw std::invalid_argument("simulate_spectral: n must be positive");

    std::vector<double> z1(num_terms), z2(num_terms), phase(num_terms);
    for (std::size_t k = 0; k < num_terms; ++k) {
        const auto pt = sample_spectral_point(model, rng);
        z1[k] = pt[0];
        z2[k] = pt[1];
    }
    for (std::size_t k = 0; k < num_terms; ++k) phase[k] = 2.0 * M_PI * rng.uniform01();

    std::vector<double> cos_z2(num_terms), sin_z2(num_terms);
    for (std::size_t k = 0; k < num_terms; ++k) {
        cos_z2[k] = std::cos(z2[k]);
        sin_z2[k] = std::sin(z2[k]);
    }

    const double amplitude = std::sqrt(2.0 * spectral_mass(model) / static_cast<double>(num_terms));
    std::vector<double> values(n * n, 0.0);

    // Rows are independent; each accumulates its terms in a fixed order, so
    // the result does not depend on the worker count. The column sweep
    // advances the phase by rotation instead of calling cos per cell.
    parallel_for(n, jobs, [&](std::size_t i) {
        double* row = values.data() + i * n;
        for (std::size_t k = 0; k < num_terms; ++k) {
            const double start = z1[k] * static_cast<double>(i) + phase[k];
            double c = std::cos(start);
            double s = std::sin(start);
            const double cb = cos_z2[k], sb = sin_z2[k];
            for (std::size_t j = 0; j < n; ++j) {
                row[j] += c;
                const double c_next = c * cb - s * sb;
                s = s * cb + c * sb;
                c = c_next;
            }
        }
        for (std::size_t j = 0; j < n; ++j) row[j] *= amplitude;
    });

    return Field({n, n}, std::move(values));
}

// ---------------------------------------------------------------------------
// Dispatcher used by experiments and the CLI.
// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::size_t burn_in = 100;        // AR warm-up rows/columns
    std::size_t spectral_terms = 5000;  // cosine terms per spectral field
    unsigned jobs = 1;
};

inline Field simulate_field(const ModelSpec& model, std::size_t n, Rng& rng,
                            const SimulateOptions& opts = {}) {
    validate_model(model);
    if (std::holds_alternative<WhiteNoise>(model)) return gaussian_noise_field({n, n}, rng);
    if (const auto* ar = std::get_if<SeparableAr>(&model))
        return simulate_ar(n, ar->a, opts.burn_in, rng);
    return simulate_spectral(model, n, opts.spectral_terms, rng, opts.jobs);
}

}  // namespace vsf
