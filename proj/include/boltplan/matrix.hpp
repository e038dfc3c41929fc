#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace boltplan {

/// Dense row-major matrix of doubles. Just enough linear algebra for the
/// transition model and the encoder; not a general-purpose library.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("matrix dimensions must be nonnegative");
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
    }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions disagree");
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int m = 0; m < a.cols; ++m) {
            const double aim = a(i, m);
            if (aim == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += aim * b(m, j);
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

/// Row vector times matrix: out_j = sum_i v_i * m(i, j).
inline std::vector<double> vecmat(const std::vector<double>& v, const Matrix& m) {
    if (static_cast<int>(v.size()) != m.rows)
        throw std::invalid_argument("vecmat: vector length does not match row count");
    std::vector<double> out(static_cast<std::size_t>(m.cols), 0.0);
    for (int i = 0; i < m.rows; ++i) {
        const double vi = v[static_cast<std::size_t>(i)];
        if (vi == 0.0) continue;
        for (int j = 0; j < m.cols; ++j) out[static_cast<std::size_t>(j)] += vi * m(i, j);
    }
    return out;
}

}  // namespace boltplan
