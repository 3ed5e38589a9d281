#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tailgen/errors.hpp"

namespace tailgen {

/// Dense row-major matrix of doubles. Rows are samples, columns coordinates.
struct Matrix {
    long rows = 0;
    long cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(long r, long c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double* operator[](long i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    const double* operator[](long i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

    std::span<double> row(long i) { return {(*this)[i], static_cast<std::size_t>(cols)}; }
    std::span<const double> row(long i) const { return {(*this)[i], static_cast<std::size_t>(cols)}; }

    bool empty() const { return rows == 0; }
};

inline void require_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw InputError(std::string(what) + " contains a non-finite value");
    }
}

inline void require_dim(std::span<const double> v, long d, const char* what) {
    if (static_cast<long>(v.size()) != d) {
        throw InputError(std::string(what) + ": expected length " + std::to_string(d) +
                         ", got " + std::to_string(v.size()));
    }
}

}  // namespace tailgen
