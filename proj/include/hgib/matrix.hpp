#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hgib/errors.hpp"

namespace hgib {

// Dense row-major matrix of doubles. Vectors are n x 1, scalars 1 x 1.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
    Matrix(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {
        if (v.size() != static_cast<std::size_t>(r) * c)
            throw ShapeError("Matrix: data length does not match rows*cols");
    }

    static Matrix zeros(int r, int c) { return Matrix(r, c); }

    static Matrix full(int r, int c, double x) {
        Matrix m(r, c);
        std::fill(m.v.begin(), m.v.end(), x);
        return m;
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix scalar(double x) { return Matrix(1, 1, {x}); }

    static Matrix row_vector(std::vector<double> data) {
        const int c = static_cast<int>(data.size());
        return Matrix(1, c, std::move(data));
    }

    static Matrix column_vector(std::vector<double> data) {
        const int r = static_cast<int>(data.size());
        return Matrix(r, 1, std::move(data));
    }

    double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }

    std::size_t size() const { return v.size(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    double max_abs_diff(const Matrix& o) const {
        if (!same_shape(o)) throw ShapeError("max_abs_diff: shape mismatch");
        double m = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::fabs(v[i] - o.v[i]));
        return m;
    }
};

inline std::string shape_string(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

}  // namespace hgib
