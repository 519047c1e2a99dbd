#include "metrics.hpp"

#include <algorithm>
#include <cmath>

namespace replab {

namespace {

constexpr double kDegenerateRel = 1e-14;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Constant matrices vanish under centering and make every similarity
// denominator zero; surface that as a typed error instead of NaN.
void check_nondegenerate(const Matrix& original, double centered_norm, const char* who) {
    if (centered_norm <= kDegenerateRel * max_abs(original))
        throw DegenerateInputError(std::string(who) + ": constant (degenerate) activations");
}

}  // namespace

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "cka") return MetricKind::cka;
    if (s == "procrustes") return MetricKind::procrustes;
    throw InvalidInputError("unknown metric '" + s + "' (expected cka or procrustes)");
}

std::string to_string(MetricKind k) {
    return k == MetricKind::cka ? "cka" : "procrustes";
}

SimilarityScore linear_cka(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) throw InvalidInputError("linear_cka: row count mismatch");
    if (x.rows() < 2) throw InvalidInputError("linear_cka: need at least 2 rows");
    Matrix xc = center_columns(x);
    Matrix yc = center_columns(y);
    double nx = frobenius_norm(crossprod(xc, xc));
    double ny = frobenius_norm(crossprod(yc, yc));
    check_nondegenerate(x, std::sqrt(nx), "linear_cka");
    check_nondegenerate(y, std::sqrt(ny), "linear_cka");
    double num = frobenius_norm(crossprod(yc, xc));
    return {clamp01(num * num / (nx * ny)), MetricKind::cka, x.rows()};
}

NormalizedMatrix normalize_for_procrustes(const Matrix& x) {
    Matrix xc = center_columns(x);
    double norm = frobenius_norm(xc);
    check_nondegenerate(x, norm, "normalize_for_procrustes");
    for (std::size_t i = 0; i < xc.rows(); ++i) {
        double* r = xc.row(i);
        for (std::size_t j = 0; j < xc.cols(); ++j) r[j] /= norm;
    }
    return {std::move(xc), x.rows(), x.cols()};
}

double procrustes_distance(const NormalizedMatrix& xn, const NormalizedMatrix& yn) {
    if (xn.data.rows() != yn.data.rows())
        throw InvalidInputError("procrustes_distance: row count mismatch");
    double fx = frobenius_norm(xn.data);
    double fy = frobenius_norm(yn.data);
    double d = fx * fx + fy * fy - 2.0 * nuclear_norm(crossprod(yn.data, xn.data));
    return std::clamp(d, 0.0, 2.0);
}

SimilarityScore procrustes_similarity(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) throw InvalidInputError("procrustes_similarity: row count mismatch");
    if (x.rows() < 2) throw InvalidInputError("procrustes_similarity: need at least 2 rows");
    double d = procrustes_distance(normalize_for_procrustes(x), normalize_for_procrustes(y));
    return {clamp01(1.0 - 0.5 * d), MetricKind::procrustes, x.rows()};
}

SimilarityScore similarity(const Matrix& x, const Matrix& y, MetricKind kind) {
    return kind == MetricKind::cka ? linear_cka(x, y) : procrustes_similarity(x, y);
}

double hsic_linear(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) throw InvalidInputError("hsic_linear: row count mismatch");
    double n = frobenius_norm(crossprod(y, x));
    return n * n;
}

}  // namespace replab
