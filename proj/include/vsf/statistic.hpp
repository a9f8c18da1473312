#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsf/errors.hpp"
#include "vsf/field.hpp"

namespace vsf {

/// Bandwidth for the Bartlett-tapered long-run variance estimate.
struct VsConfig {
    std::size_t q = 0;  // 0 selects default_bandwidth(min side)
};

/// The rescaled-variance statistic with its raw ingredients. sum_sq_partial
/// and sum_partial are the unnormalized accumulations over the centered
/// partial sums S*; with N = prod(dims),
///   m_n = N^{-2} * (sum_sq_partial - N^{-1} * sum_partial^2) / s_hat_sq.
struct VsResult {
    double m_n = 0.0;
    double s_hat_sq = 0.0;
    double sum_sq_partial = 0.0;
    double sum_partial = 0.0;
    std::vector<std::size_t> n_dims;
    std::size_t q = 0;
};

/// Calibrated bandwidth: 30 at n = 128 and 40 at n = 256; other sizes
/// interpolate those two anchors via q = round(30 * (n/128)^0.4), clamped to
/// [1, n]. The interpolation rule is a heuristic of this toolkit.
inline std::size_t default_bandwidth(std::size_t n) {
    if (n == 0) throw std::invalid_argument("default_bandwidth: n must be positive");
    const double q = std::round(30.0 * std::pow(static_cast<double>(n) / 128.0, 0.4));
    auto qi = static_cast<std::size_t>(std::max(1.0, q));
    return std::min(qi, n);
}

namespace detail {

inline std::vector<std::size_t> abs_lags(const std::vector<std::size_t>& dims,
                                         const std::vector<std::int64_t>& lag,
                                         const char* what) {
    if (lag.size() != dims.size())
        throw std::invalid_argument(std::string(what) + ": lag rank " + std::to_string(lag.size()) +
                                    " does not match field rank " + std::to_string(dims.size()));
    std::vector<std::size_t> a(lag.size());
    for (std::size_t i = 0; i < lag.size(); ++i) {
        const std::uint64_t m = static_cast<std::uint64_t>(std::llabs(lag[i]));
        if (m >= dims[i])
            throw std::invalid_argument(std::string(what) + ": |lag| " + std::to_string(m) +
                                        " out of range for dimension " + std::to_string(dims[i]));
        a[i] = static_cast<std::size_t>(m);
    }
    return a;
}

// Sum over k of y[k] * y[k + lag], lag componentwise non-negative, summed over
// the index box where both factors are in range. The innermost dimension is a
// contiguous run so the loop vectorizes.
inline double lag_dot(const std::vector<double>& y, const std::vector<std::size_t>& dims,
                      const std::vector<std::size_t>& strides,
                      const std::vector<std::size_t>& lag) {
    const std::size_t d = dims.size();
    std::size_t offset = 0;
    for (std::size_t i = 0; i < d; ++i) offset += lag[i] * strides[i];
    const std::size_t run = dims[d - 1] - lag[d - 1];

    double total = 0.0;
    std::vector<std::size_t> idx(d > 1 ? d - 1 : 0, 0);
    for (;;) {
        std::size_t base = 0;
        for (std::size_t i = 0; i + 1 < d; ++i) base += idx[i] * strides[i];
        const double* a = y.data() + base;
        const double* b = a + offset;
        double acc = 0.0;
        for (std::size_t j = 0; j < run; ++j) acc += a[j] * b[j];
        total += acc;

        std::size_t axis = idx.size();
        while (axis-- > 0) {
            if (++idx[axis] < dims[axis] - lag[axis]) break;
            idx[axis] = 0;
            if (axis == 0) return total;
        }
        if (d == 1) return total;
    }
}

// Bartlett-weighted covariance sum over the lag box B_{q-1}. Covariances and
// weights depend on lags only through their absolute values, so the signed box
// folds onto non-negative lags with multiplicity prod(2 - [j_i == 0]).
inline double bartlett_sum(const std::vector<double>& y, const std::vector<std::size_t>& dims,
                           std::size_t q) {
    const auto strides = row_major_strides(dims);
    const std::size_t d = dims.size();
    const double n_total = static_cast<double>(y.size());
    const double qd = static_cast<double>(q);

    std::vector<std::size_t> lag(d, 0);
    double s2 = 0.0;
    for (;;) {
        double weight = 1.0;
        double mult = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            weight *= 1.0 - static_cast<double>(lag[i]) / qd;
            if (lag[i] > 0) mult *= 2.0;
        }
        s2 += mult * weight * lag_dot(y, dims, strides, lag) / n_total;

        std::size_t axis = d;
        bool done = true;
        while (axis-- > 0) {
            if (++lag[axis] < q && lag[axis] < dims[axis]) {
                done = false;
                break;
            }
            lag[axis] = 0;
        }
        if (done) return s2;
    }
}

// ŝ² is treated as zero below this fraction of the lag-0 covariance; the
// constant-field case (r0 == 0) degenerates as well. Because the estimator
// evaluates covariances at absolute lags, the mixed-sign quadrants of the
// taper reuse the same-sign covariance, and on small fields with large q the
// sum can come out negative; those inputs are reported as degenerate too
// rather than returning a negative variance estimate.
constexpr double kDegenerateRel = 1e-14;

inline void check_bandwidth(const std::vector<std::size_t>& dims, std::size_t q, const char* what) {
    const std::size_t min_dim = *std::min_element(dims.begin(), dims.end());
    if (q == 0 || q > min_dim)
        throw std::invalid_argument(std::string(what) + ": bandwidth q = " + std::to_string(q) +
                                    " must lie in [1, " + std::to_string(min_dim) + "]");
}

}  // namespace detail

/// Empirical covariance r̂(j): mean-centered cross moment at absolute lags,
/// normalized by the full lattice size (not the overlap count). Depends on j
/// only through |j_i|.
inline double empirical_cov(const Field& field, const std::vector<std::int64_t>& lag) {
    const auto abs_lag = detail::abs_lags(field.dims(), lag, "empirical_cov");
    const Field c = centered(field);
    const auto strides = detail::row_major_strides(c.dims());
    return detail::lag_dot(c.values(), c.dims(), strides, abs_lag) /
           static_cast<double>(c.size());
}

/// Bartlett taper: prod(1 - |j_i|/q) for j in the box B_{q-1}.
inline double bartlett_weight(std::size_t q, const std::vector<std::int64_t>& lag) {
    if (q == 0) throw std::invalid_argument("bartlett_weight: q must be positive");
    double w = 1.0;
    for (std::int64_t j : lag) {
        const std::uint64_t m = static_cast<std::uint64_t>(std::llabs(j));
        if (m > q - 1)
            throw std::invalid_argument("bartlett_weight: lag " + std::to_string(j) +
                                        " outside B_{q-1} for q = " + std::to_string(q));
        w *= 1.0 - static_cast<double>(m) / static_cast<double>(q);
    }
    return w;
}

/// Long-run variance estimate ŝ² = sum over B_{q-1} of Bartlett weights times
/// empirical covariances. Non-negative by construction of the weights; a
/// (near-)zero value reports a degenerate field.
inline double long_run_variance(const Field& field, std::size_t q) {
    detail::check_bandwidth(field.dims(), q, "long_run_variance");
    const Field c = centered(field);
    const auto& y = c.values();
    double r0 = 0.0;
    for (double v : y) r0 += v * v;
    r0 /= static_cast<double>(y.size());
    const double s2 = detail::bartlett_sum(y, c.dims(), q);
    if (!(s2 > detail::kDegenerateRel * r0))
        throw degenerate_field_error("long_run_variance: degenerate field (s^2 = " +
                                     std::to_string(s2) + ")");
    return s2;
}

/// The rescaled-variance statistic M_n. Partial sums of the centered field are
/// taken over all corner boxes via prefix sums; their raw sum and sum of
/// squares are accumulated first and the size normalizations applied last.
inline VsResult vs_statistic(const Field& field, VsConfig cfg = {}) {
    const auto& dims = field.dims();
    const std::size_t min_dim = *std::min_element(dims.begin(), dims.end());
    const std::size_t q = cfg.q == 0 ? default_bandwidth(min_dim) : cfg.q;
    detail::check_bandwidth(dims, q, "vs_statistic");

    const Field c = centered(field);
    const auto& y = c.values();
    const double n_total = static_cast<double>(y.size());

    double r0 = 0.0;
    for (double v : y) r0 += v * v;
    r0 /= n_total;
    const double s2 = detail::bartlett_sum(y, dims, q);
    if (!(s2 > detail::kDegenerateRel * r0))
        throw degenerate_field_error("vs_statistic: degenerate field (s^2 = " +
                                     std::to_string(s2) + ")");

    // Prefix sums of the centered field are exactly the centered partial sums.
    std::vector<double> partial = y;
    detail::prefix_sum_inplace(partial, dims);
    double sum = 0.0, sum_sq = 0.0;
    for (double s : partial) {
        sum += s;
        sum_sq += s * s;
    }

    const double bracket = std::max(0.0, sum_sq - sum * sum / n_total);
    VsResult out;
    out.m_n = bracket / n_total / n_total / s2;
    out.s_hat_sq = s2;
    out.sum_sq_partial = sum_sq;
    out.sum_partial = sum;
    out.n_dims = dims;
    out.q = q;
    return out;
}

/// Literal evaluation of the same statistic for testing: every partial sum by
/// independent rectangle summation, every covariance by its own loop over the
/// full signed lag box, and the variance-of-partial-sums form of M_n. Guarded
/// to small fields (the rectangle sums cost O(N^2)).
inline VsResult vs_statistic_bruteforce(const Field& field, VsConfig cfg = {}) {
    const auto& dims = field.dims();
    if (field.size() > 10000)
        throw std::invalid_argument("vs_statistic_bruteforce: field size " +
                                    std::to_string(field.size()) + " exceeds the 10^4 guard");
    const std::size_t min_dim = *std::min_element(dims.begin(), dims.end());
    const std::size_t q = cfg.q == 0 ? default_bandwidth(min_dim) : cfg.q;
    detail::check_bandwidth(dims, q, "vs_statistic_bruteforce");

    const std::size_t d = dims.size();
    const auto strides = detail::row_major_strides(dims);
    const auto& x = field.values();
    const double n_total = static_cast<double>(x.size());

    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n_total;

    // r̂ over every signed lag in B_{q-1}, each evaluated from scratch.
    double s2 = 0.0;
    {
        std::vector<std::int64_t> lag(d, -(static_cast<std::int64_t>(q) - 1));
        for (;;) {
            double weight = 1.0;
            for (std::int64_t j : lag)
                weight *= 1.0 - static_cast<double>(std::llabs(j)) / static_cast<double>(q);

            double cov = 0.0;
            std::vector<std::size_t> k(d, 0);
            bool any = true;
            for (std::size_t i = 0; i < d; ++i)
                if (dims[i] <= static_cast<std::size_t>(std::llabs(lag[i]))) any = false;
            while (any) {
                std::size_t flat = 0, flat_lag = 0;
                for (std::size_t i = 0; i < d; ++i) {
                    const auto m = static_cast<std::size_t>(std::llabs(lag[i]));
                    flat += k[i] * strides[i];
                    flat_lag += (k[i] + m) * strides[i];
                }
                cov += (x[flat] - mean) * (x[flat_lag] - mean);
                std::size_t axis = d;
                bool done = true;
                while (axis-- > 0) {
                    const auto m = static_cast<std::size_t>(std::llabs(lag[axis]));
                    if (++k[axis] < dims[axis] - m) {
                        done = false;
                        break;
                    }
                    k[axis] = 0;
                }
                if (done) break;
            }
            s2 += weight * cov / n_total;

            std::size_t axis = d;
            bool done = true;
            while (axis-- > 0) {
                if (++lag[axis] <= static_cast<std::int64_t>(q) - 1) {
                    done = false;
                    break;
                }
                lag[axis] = -(static_cast<std::int64_t>(q) - 1);
            }
            if (done) break;
        }
    }

    double r0 = 0.0;
    for (double v : x) r0 += (v - mean) * (v - mean);
    r0 /= n_total;
    if (!(s2 > detail::kDegenerateRel * r0))
        throw degenerate_field_error("vs_statistic_bruteforce: degenerate field (s^2 = " +
                                     std::to_string(s2) + ")");

    // Every centered partial sum by direct rectangle summation.
    std::vector<double> partial(x.size());
    {
        std::vector<std::size_t> corner(d, 0);
        for (;;) {
            double s = 0.0;
            std::vector<std::size_t> i(d, 0);
            for (;;) {
                std::size_t flat = 0;
                for (std::size_t a = 0; a < d; ++a) flat += i[a] * strides[a];
                s += x[flat] - mean;
                std::size_t axis = d;
                bool done = true;
                while (axis-- > 0) {
                    if (++i[axis] <= corner[axis]) {
                        done = false;
                        break;
                    }
                    i[axis] = 0;
                }
                if (done) break;
            }
            std::size_t flat_corner = 0;
            for (std::size_t a = 0; a < d; ++a) flat_corner += corner[a] * strides[a];
            partial[flat_corner] = s;

            std::size_t axis = d;
            bool done = true;
            while (axis-- > 0) {
                if (++corner[axis] < dims[axis]) {
                    done = false;
                    break;
                }
                corner[axis] = 0;
            }
            if (done) break;
        }
    }

    double sum = 0.0, sum_sq = 0.0;
    for (double s : partial) {
        sum += s;
        sum_sq += s * s;
    }
    const double s_bar = sum / n_total;
    double var = 0.0;
    for (double s : partial) var += (s - s_bar) * (s - s_bar);
    var /= n_total;

    VsResult out;
    out.m_n = var / n_total / s2;
    out.s_hat_sq = s2;
    out.sum_sq_partial = sum_sq;
    out.sum_partial = sum;
    out.n_dims = dims;
    out.q = q;
    return out;
}

}  // namespace vsf
