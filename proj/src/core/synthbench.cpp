#include "synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "metrics.hpp"
#include "rng.hpp"

namespace replab {

std::pair<Matrix, Matrix> generate_pair(const OverlapSpec& spec) {
    if (spec.n_examples < 2) throw InvalidInputError("generate_pair: need at least 2 examples");
    if (spec.n_features < 1) throw InvalidInputError("generate_pair: need at least 1 feature");
    if (spec.shared_fraction < 0.0 || spec.shared_fraction > 1.0)
        throw InvalidInputError("generate_pair: shared_fraction outside [0,1]");

    const std::size_t p = spec.n_features;
    const auto shared = static_cast<std::size_t>(
        std::llround(spec.shared_fraction * static_cast<double>(p)));

    Rng rng(spec.seed);
    // A is drawn first, so for a fixed (n, seed) the same A underlies every
    // fraction, as in the four-matrix A/B/C/D setup.
    Matrix a = Matrix::random_normal(spec.n_examples, p, rng);
    Matrix b = a;
    for (std::size_t i = 0; i < spec.n_examples; ++i)
        for (std::size_t j = shared; j < p; ++j) b(i, j) = rng.next_normal();
    return {std::move(a), std::move(b)};
}

std::vector<SweepRow> run_limitation_sweep(const std::vector<std::size_t>& n_values,
                                           const std::vector<double>& fractions,
                                           const std::vector<std::uint64_t>& seeds,
                                           std::size_t n_features) {
    if (n_values.empty() || fractions.empty() || seeds.empty())
        throw InvalidInputError("run_limitation_sweep: empty n/fraction/seed list");

    std::vector<SweepRow> rows;
    for (double f : fractions) {
        for (std::size_t n : n_values) {
            double cka_sum = 0.0, proc_sum = 0.0;
            for (std::uint64_t s : seeds) {
                auto [a, b] = generate_pair({n, n_features, f, s});
                cka_sum += linear_cka(a, b).value;
                proc_sum += procrustes_similarity(a, b).value;
            }
            auto count = static_cast<double>(seeds.size());
            rows.push_back({n, f, cka_sum / count, proc_sum / count, seeds.size()});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.fraction != b.fraction) return a.fraction > b.fraction;
        return a.n < b.n;
    });
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "n,fraction,cka_mean,procrustes_mean,n_seeds\n";
    char buf[160];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.3f,%.6f,%.6f,%zu\n", r.n, r.fraction, r.cka_mean,
                      r.procrustes_mean, r.n_seeds);
        out += buf;
    }
    return out;
}

}  // namespace replab
