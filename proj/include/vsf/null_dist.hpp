#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsf/field.hpp"
#include "vsf/parallel.hpp"
#include "vsf/rng.hpp"

namespace vsf {

/// Brownian sheet sampled at the lattice k/grid_n, k in {1,..,grid_n}^d,
/// stored row-major. Built as scaled prefix sums of white noise, which is
/// exact in law at the lattice points.
struct SheetGrid {
    std::size_t grid_n = 0;
    std::size_t dim = 0;
    std::vector<double> values;
};

inline SheetGrid brownian_sheet(std::size_t grid_n, std::size_t d, Rng& rng) {
    if (grid_n < 2) throw std::invalid_argument("brownian_sheet: grid_n must be >= 2");
    if (d == 0) throw std::invalid_argument("brownian_sheet: d must be >= 1");
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= grid_n;
    SheetGrid sheet{grid_n, d, std::vector<double>(total)};
    for (double& v : sheet.values) v = rng.normal();
    detail::prefix_sum_inplace(sheet.values, std::vector<std::size_t>(d, grid_n));
    const double scale = std::pow(static_cast<double>(grid_n), -0.5 * static_cast<double>(d));
    for (double& v : sheet.values) v *= scale;
    return sheet;
}

/// One draw of the limiting null law: the variance functional of the
/// tied-down sheet, with both integrals taken as Riemann sums over the same
/// right-endpoint lattice as the sheet itself. Tiny negative rounding
/// residues are clamped to zero.
inline double u_d_realization(const SheetGrid& sheet) {
    const std::size_t n = sheet.grid_n;
    const std::size_t d = sheet.dim;
    const double corner = sheet.values.back();
    const double inv_n = 1.0 / static_cast<double>(n);

    double sum = 0.0, sum_sq = 0.0;
    if (d == 2) {
        const double* v = sheet.values.data();
        for (std::size_t i = 0; i < n; ++i) {
            const double ti_corner = static_cast<double>(i + 1) * inv_n * corner;
            const double* row = v + i * n;
            double row_sum = 0.0, row_sq = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double g = row[j] - ti_corner * (static_cast<double>(j + 1) * inv_n);
                row_sum += g;
                row_sq += g * g;
            }
            sum += row_sum;
            sum_sq += row_sq;
        }
    } else {
        std::vector<std::size_t> idx(d, 0);
        for (const double b : sheet.values) {
            double p = 1.0;
            for (std::size_t a = 0; a < d; ++a) p *= static_cast<double>(idx[a] + 1) * inv_n;
            const double g = b - p * corner;
            sum += g;
            sum_sq += g * g;
            std::size_t axis = d;
            while (axis-- > 0) {
                if (++idx[axis] < n) break;
                idx[axis] = 0;
            }
        }
    }
    const double total = static_cast<double>(sheet.values.size());
    const double mean_g = sum / total;
    return std::max(0.0, sum_sq / total - mean_g * mean_g);
}

/// Sorted Monte Carlo sample of the limiting law, with the configuration that
/// produced it.
struct NullTable {
    std::size_t d = 0;
    std::size_t grid_n = 0;
    std::size_t reps = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> sorted_values;
};

/// Draws `reps` independent realizations (stream_id = replicate index) and
/// sorts them. The result does not depend on the worker count.
inline NullTable build_null_table(std::size_t d, std::size_t grid_n, std::size_t reps,
                                  std::uint64_t master_seed, unsigned jobs = 0) {
    if (reps == 0) throw std::invalid_argument("build_null_table: reps must be >= 1");
    NullTable table{d, grid_n, reps, master_seed, std::vector<double>(reps)};
    parallel_for(reps, jobs, [&](std::size_t rep) {
        Rng rng(RngSpec{master_seed, rep});
        table.sorted_values[rep] = u_d_realization(brownian_sheet(grid_n, d, rng));
    });
    std::sort(table.sorted_values.begin(), table.sorted_values.end());
    return table;
}

/// Lower empirical quantile: the order statistic at rank ceil(p * reps).
inline double quantile(const NullTable& table, double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("quantile: p must lie in (0, 1)");
    const double r = std::ceil(p * static_cast<double>(table.reps));
    std::size_t rank = static_cast<std::size_t>(std::max(1.0, r));
    rank = std::min(rank, table.reps);
    return table.sorted_values[rank - 1];
}

/// Add-one-corrected Monte Carlo p-value: (1 + #{values >= m}) / (reps + 1).
inline double p_value(const NullTable& table, double m) {
    if (!std::isfinite(m)) throw std::invalid_argument("p_value: statistic must be finite");
    const auto it = std::lower_bound(table.sorted_values.begin(), table.sorted_values.end(), m);
    const auto count = static_cast<double>(table.sorted_values.end() - it);
    return (1.0 + count) / (static_cast<double>(table.reps) + 1.0);
}

/// Exact mean of the limiting law: (1/2)^d + (1/4)^d - 2 (1/3)^d.
inline double expected_u(std::size_t d) {
    if (d == 0) throw std::invalid_argument("expected_u: d must be >= 1");
    const double dd = static_cast<double>(d);
    return std::pow(0.5, dd) + std::pow(0.25, dd) - 2.0 * std::pow(1.0 / 3.0, dd);
}

/// Kolmogorov distribution function F_K(y) = 1 - 2 sum (-1)^{k-1} e^{-2 k^2 y^2},
/// truncated once a term drops below 1e-12. The d = 1 null law has CDF
/// F_K(pi * sqrt(x)).
inline double kolmogorov_cdf(double y) {
    if (!(y > 0.0)) return 0.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k < 100000; ++k) {
        const double term = std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) * y * y);
        sum += sign * term;
        if (term < 1e-12) break;
        sign = -sign;
    }
    return std::clamp(1.0 - 2.0 * sum, 0.0, 1.0);
}

}  // namespace vsf
