#include "matrix.hpp"

#include <algorithm>
#include <cmath>

#include "rng.hpp"

namespace replab {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw InvalidInputError("matrix: rows*cols != number of entries");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::random_normal(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data_) v = rng.next_normal();
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Matrix::validate_finite(const std::string& what) const {
    if (!all_finite()) throw InvalidInputError(what + ": non-finite entry");
}

Matrix center_columns(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw InvalidInputError("center_columns: empty matrix");
    std::vector<double> mean(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) mean[j] += r[j];
    }
    for (double& v : mean) v /= static_cast<double>(m.rows());
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* r = m.row(i);
        double* o = out.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) o[j] = r[j] - mean[j];
    }
    return out;
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) s += r[j] * r[j];
    }
    return std::sqrt(s);
}

double max_abs(const Matrix& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) s = std::max(s, std::fabs(r[j]));
    }
    return s;
}

Matrix crossprod(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw InvalidInputError("crossprod: row count mismatch");
    Matrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* ra = a.row(k);
        const double* rb = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            double aki = ra[i];
            if (aki == 0.0) continue;
            double* o = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aki * rb[j];
        }
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InvalidInputError("matmul: inner dimension mismatch");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ra = a.row(i);
        double* o = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = ra[k];
            if (aik == 0.0) continue;
            const double* rb = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aik * rb[j];
        }
    }
    return out;
}

Matrix tcrossprod(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw InvalidInputError("tcrossprod: column count mismatch");
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ra = a.row(i);
        double* o = out.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* rb = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ra[k] * rb[k];
            o[j] = s;
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

namespace {

constexpr double kJacobiTol = 1e-12;
constexpr std::size_t kJacobiMaxSweeps = 100;

// One-sided Jacobi (Hestenes): rotate column pairs of A until all pairs are
// numerically orthogonal; the column norms are then the singular values.
// Each pairwise dot product is an off-diagonal entry of the Gram matrix A^T A,
// so the convergence test is on the Gram side as required.
std::vector<double> jacobi_singular_values(Matrix a) {
    const std::size_t n = a.rows();
    const std::size_t p = a.cols();
    std::size_t sweeps = 0;
    bool converged = false;
    while (!converged) {
        if (sweeps >= kJacobiMaxSweeps)
            throw NumericalFailureError("singular_values: Jacobi sweep cap reached", sweeps);
        ++sweeps;
        converged = true;
        for (std::size_t i = 0; i + 1 < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    double ai = a(k, i), aj = a(k, j);
                    alpha += ai * ai;
                    beta += aj * aj;
                    gamma += ai * aj;
                }
                if (std::fabs(gamma) <= kJacobiTol * std::sqrt(alpha * beta)) continue;
                converged = false;
                // Rotation angle zeroing the (i,j) Gram entry.
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                           (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (std::size_t k = 0; k < n; ++k) {
                    double ai = a(k, i), aj = a(k, j);
                    a(k, i) = c * ai - s * aj;
                    a(k, j) = s * ai + c * aj;
                }
            }
        }
    }
    std::vector<double> sv(p);
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += a(k, j) * a(k, j);
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

}  // namespace

std::vector<double> singular_values(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw InvalidInputError("singular_values: empty matrix");
    // Transposing keeps the working set at min(rows, cols) columns.
    if (m.cols() > m.rows()) return jacobi_singular_values(transpose(m));
    return jacobi_singular_values(m);
}

double nuclear_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : singular_values(m)) s += v;
    return s;
}

}  // namespace replab
