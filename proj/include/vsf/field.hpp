#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vsf/errors.hpp"
#include "vsf/rng.hpp"

namespace vsf {

/// Rectangular lattice sample of a real random field, stored flat in
/// row-major order (last index fastest). The dimension d = dims.size() is a
/// runtime parameter; d = 2 is the common case throughout.
class Field {
public:
    Field(std::vector<std::size_t> dims, std::vector<double> values)
        : dims_(std::move(dims)), values_(std::move(values)) {
        if (dims_.empty()) throw std::invalid_argument("field: dims must be non-empty");
        std::size_t total = 1;
        for (std::size_t n : dims_) {
            if (n == 0) throw std::invalid_argument("field: dims must be positive");
            total *= n;
        }
        if (values_.size() != total)
            throw std::invalid_argument("field: values length " + std::to_string(values_.size()) +
                                        " does not match dims product " + std::to_string(total));
        for (double v : values_)
            if (!std::isfinite(v))
                throw std::invalid_argument("field: values must be finite");
    }

    static Field zeros(std::vector<std::size_t> dims) {
        std::size_t total = 1;
        for (std::size_t n : dims) total *= n;
        return Field(std::move(dims), std::vector<double>(total, 0.0));
    }

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t flat) const { return values_[flat]; }

private:
    std::vector<std::size_t> dims_;
    std::vector<double> values_;
};

/// Cumulative rectangle sums: cumsums at multi-index j (1-based corner) holds
/// the sum of the source field over the box [1,j1] x ... x [1,jd].
struct PrefixSum {
    std::vector<std::size_t> dims;
    std::vector<double> cumsums;
};

namespace detail {

inline std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& dims) {
    std::vector<std::size_t> strides(dims.size());
    std::size_t s = 1;
    for (std::size_t a = dims.size(); a-- > 0;) {
        strides[a] = s;
        s *= dims[a];
    }
    return strides;
}

// One sequential accumulation pass per dimension, in place.
inline void prefix_sum_inplace(std::vector<double>& data, const std::vector<std::size_t>& dims) {
    const auto strides = row_major_strides(dims);
    for (std::size_t axis = 0; axis < dims.size(); ++axis) {
        const std::size_t n = dims[axis];
        if (n < 2) continue;
        const std::size_t stride = strides[axis];
        const std::size_t block = n * stride;
        for (std::size_t base = 0; base < data.size(); base += block)
            for (std::size_t k = 1; k < n; ++k) {
                double* cur = data.data() + base + k * stride;
                const double* prev = cur - stride;
                for (std::size_t i = 0; i < stride; ++i) cur[i] += prev[i];
            }
    }
}

}  // namespace detail

inline PrefixSum prefix_sum(const Field& field) {
    PrefixSum out{field.dims(), field.values()};
    detail::prefix_sum_inplace(out.cumsums, out.dims);
    return out;
}

inline double field_mean(const Field& field) {
    const auto& v = field.values();
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

/// Field minus its own mean.
inline Field centered(const Field& field) {
    const double mu = field_mean(field);
    std::vector<double> v = field.values();
    for (double& x : v) x -= mu;
    return Field(field.dims(), std::move(v));
}

/// i.i.d. standard normal entries, reproducible from the stream spec.
inline Field gaussian_noise_field(const std::vector<std::size_t>& dims, Rng& rng) {
    std::size_t total = 1;
    for (std::size_t n : dims) {
        if (n == 0) throw std::invalid_argument("gaussian_noise_field: dims must be positive");
        total *= n;
    }
    std::vector<double> v(total);
    for (double& x : v) x = rng.normal();
    return Field(dims, std::move(v));
}

inline Field gaussian_noise_field(const std::vector<std::size_t>& dims, RngSpec spec) {
    Rng rng(spec);
    return gaussian_noise_field(dims, rng);
}

}  // namespace vsf
