#ifndef REPLAB_CORE_METRICS_HPP
#define REPLAB_CORE_METRICS_HPP

#include <cstddef>
#include <string>

#include "matrix.hpp"

namespace replab {

enum class MetricKind { cka, procrustes };

MetricKind metric_kind_from_string(const std::string& s);
std::string to_string(MetricKind k);

struct SimilarityScore {
    double value = 0.0;  // in [0,1] after clamping
    MetricKind metric_kind = MetricKind::cka;
    std::size_t n_examples = 0;
};

/// Column-centered matrix scaled to unit Frobenius norm.
struct NormalizedMatrix {
    Matrix data;
    std::size_t original_rows = 0;
    std::size_t original_cols = 0;
};

/// Linear CKA between raw activation matrices: columns are centered
/// internally, then |y^T x|_F^2 / (|x^T x|_F |y^T y|_F). Throws
/// DegenerateInputError when either matrix is constant (zero after centering).
SimilarityScore linear_cka(const Matrix& x, const Matrix& y);

/// Centers columns and scales to unit Frobenius norm. Throws
/// DegenerateInputError for constant input.
NormalizedMatrix normalize_for_procrustes(const Matrix& x);

/// Residual |X|_F^2 + |Y|_F^2 - 2 |Y^T X|_* after the optimal orthogonal
/// alignment of the normalized inputs; clamped to [0,2].
double procrustes_distance(const NormalizedMatrix& xn, const NormalizedMatrix& yn);

/// 1 - distance/2, clamped to [0,1].
SimilarityScore procrustes_similarity(const Matrix& x, const Matrix& y);

SimilarityScore similarity(const Matrix& x, const Matrix& y, MetricKind kind);

/// Linear-kernel HSIC, |y^T x|_F^2, on inputs the caller already centered.
/// This is the unnormalized CKA numerator.
double hsic_linear(const Matrix& x, const Matrix& y);

}  // namespace replab

#endif
