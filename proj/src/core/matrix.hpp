#ifndef REPLAB_CORE_MATRIX_HPP
#define REPLAB_CORE_MATRIX_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace replab {

class Rng;

/// Dense row-major matrix of 64-bit reals. All operations in this module are
/// pure functions over immutable inputs.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix random_normal(std::size_t rows, std::size_t cols, Rng& rng);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    bool all_finite() const;
    /// Rejects NaN/Inf; meant for values arriving from files or the C API.
    void validate_finite(const std::string& what) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Subtracts each column's arithmetic mean; shape preserved.
Matrix center_columns(const Matrix& m);

/// sqrt of the sum of squared entries.
double frobenius_norm(const Matrix& m);

/// Largest |entry|.
double max_abs(const Matrix& m);

/// a^T b; requires a.rows == b.rows. Result is a.cols x b.cols.
Matrix crossprod(const Matrix& a, const Matrix& b);

/// a b; requires a.cols == b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a b^T; requires a.cols == b.cols.
Matrix tcrossprod(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// Singular values in descending order via one-sided Jacobi on the Gram side
/// (threshold 1e-12 on off-diagonal mass, cap 100 sweeps). Throws
/// NumericalFailureError carrying the sweep count if the cap is hit.
std::vector<double> singular_values(const Matrix& m);

/// Sum of singular values.
double nuclear_norm(const Matrix& m);

}  // namespace replab

#endif
