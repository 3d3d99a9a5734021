#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nmfpack/errors.hpp"

namespace nmfpack {

// Dense row-major matrix of doubles. Value semantics throughout; every
// operation below returns a fresh matrix and leaves its inputs untouched.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_)
            throw dimension_mismatch("entry count does not equal rows * cols");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return Matrix();
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols()) throw dimension_mismatch("ragged row list");
            for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    std::vector<double> row(std::size_t i) const {
        return {data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_)};
    }

    std::vector<double> col(std::size_t j) const {
        std::vector<double> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    void set_row(std::size_t i, const std::vector<double>& r) {
        for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = r[j];
    }

    void set_col(std::size_t j, const std::vector<double>& c) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
    }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    // columns selected by index list, in the given order
    Matrix select_cols(const std::vector<std::size_t>& idx) const {
        Matrix out(rows_, idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j)
            for (std::size_t i = 0; i < rows_; ++i) out(i, j) = (*this)(i, idx[j]);
        return out;
    }

    Matrix select_rows(const std::vector<std::size_t>& idx) const {
        Matrix out(idx.size(), cols_);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < cols_; ++j) out(i, j) = (*this)(idx[i], j);
        return out;
    }

    double min_entry() const {
        double m = data_.empty() ? 0.0 : data_.front();
        for (double v : data_) m = std::min(m, v);
        return m;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::fabs(v));
        return m;
    }

    void clamp_nonnegative(double tol = 0.0) {
        for (double& v : data_)
            if (v < 0.0 && v >= -tol) v = 0.0;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw dimension_mismatch("matrix product");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw dimension_mismatch("matrix sum");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw dimension_mismatch("matrix difference");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

inline Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (double& v : c.data()) v *= s;
    return c;
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return std::sqrt(s);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double norm1(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += std::fabs(v);
    return s;
}

inline double norm_inf(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::fabs(v));
    return s;
}

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

// A * x for a vector x
inline std::vector<double> matvec(const Matrix& m, const std::vector<double>& x) {
    if (m.cols() != x.size()) throw dimension_mismatch("matvec");
    std::vector<double> y(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

// x^T * A for a vector x
inline std::vector<double> vecmat(const std::vector<double>& x, const Matrix& m) {
    if (m.rows() != x.size()) throw dimension_mismatch("vecmat");
    std::vector<double> y(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < m.cols(); ++j) y[j] += xi * m(i, j);
    }
    return y;
}

inline std::vector<double> row_l1_norms(const Matrix& m) {
    std::vector<double> norms(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) norms[i] += std::fabs(m(i, j));
    return norms;
}

// Scales every row to unit l1 norm. Throws zero_row_error on an all-zero row;
// the caller can recover the scale factors from the input's row norms.
inline Matrix normalize_rows_l1(const Matrix& m) {
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double norm = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) norm += std::fabs(m(i, j));
        if (norm == 0.0) throw zero_row_error(i);
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) / norm;
    }
    return out;
}

} // namespace nmfpack
