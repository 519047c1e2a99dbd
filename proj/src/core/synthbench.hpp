#ifndef REPLAB_CORE_SYNTHBENCH_HPP
#define REPLAB_CORE_SYNTHBENCH_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "matrix.hpp"

namespace replab {

/// Controls a pair of synthetic activation matrices with a given fraction of
/// identical feature columns.
struct OverlapSpec {
    std::size_t n_examples = 0;
    std::size_t n_features = 50;
    double shared_fraction = 0.0;  // in [0,1]; shared count = round(fraction * features)
    std::uint64_t seed = 0;
};

/// First matrix is i.i.d. standard normal; the second shares the leading
/// round(fraction*p) columns and fills the rest with fresh normal columns.
/// Bit-identical output for identical spec.
std::pair<Matrix, Matrix> generate_pair(const OverlapSpec& spec);

struct SweepRow {
    std::size_t n = 0;
    double fraction = 0.0;
    double cka_mean = 0.0;
    double procrustes_mean = 0.0;
    std::size_t n_seeds = 0;
};

/// Mean CKA and Procrustes scores over seeds for every (n, fraction) cell,
/// sorted by fraction descending then n ascending.
std::vector<SweepRow> run_limitation_sweep(const std::vector<std::size_t>& n_values,
                                           const std::vector<double>& fractions,
                                           const std::vector<std::uint64_t>& seeds,
                                           std::size_t n_features = 50);

/// CSV with header n,fraction,cka_mean,procrustes_mean,n_seeds.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace replab

#endif
