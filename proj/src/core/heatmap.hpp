#ifndef REPLAB_CORE_HEATMAP_HPP
#define REPLAB_CORE_HEATMAP_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "metrics.hpp"
#include "vae.hpp"

namespace replab {

/// Layers x layers grid of similarity scores averaged over seed pairs.
/// Degenerate (constant) layers are masked, not aborted on.
struct SimilarityHeatmap {
    std::vector<std::string> row_layers;
    std::vector<std::string> col_layers;
    Matrix values;                   // in [0,1] where unmasked
    std::vector<std::uint8_t> mask;  // row-major, 1 = masked
    std::size_t n_seed_pairs = 0;
    MetricKind metric_kind = MetricKind::cka;

    bool masked(std::size_t i, std::size_t j) const { return mask[i * col_layers.size() + j] != 0; }
};

/// Cell (j,k) = mean over all (a_i, b_l) capture pairs of
/// metric(layer_j of a_i, layer_k of b_l).
SimilarityHeatmap average_heatmap(const std::vector<const ActivationCapture*>& captures_a,
                                  const std::vector<const ActivationCapture*>& captures_b,
                                  MetricKind metric);

std::string render_csv(const SimilarityHeatmap& h);
SimilarityHeatmap parse_heatmap_csv(const std::string& text);

/// 8-bit binary PGM, pixel = round(255 * score), masked cells 0.
std::string render_pgm(const SimilarityHeatmap& h);
/// Sidecar for masked cells: 255 = masked, 0 = valid.
std::string render_pgm_mask(const SimilarityHeatmap& h);

std::string render_svg(const SimilarityHeatmap& h);

/// Writes <base>.csv, <base>.pgm and <base>.svg; adds <base>.mask.pgm when any
/// cell is masked.
void render_to_files(const SimilarityHeatmap& h, const std::string& base_path);

/// Mean of unmasked cells restricted to the given row/col layer names.
double block_mean(const SimilarityHeatmap& h, const std::vector<std::string>& rows,
                  const std::vector<std::string>& cols);

/// Encoder block = input + enc_* layers; decoder block = dec_* + output.
/// The mean/variance/sampled trio belongs to neither.
std::vector<std::string> encoder_block_layers(const std::vector<std::string>& layers);
std::vector<std::string> decoder_block_layers(const std::vector<std::string>& layers);

double encoder_block_mean(const SimilarityHeatmap& h);
double decoder_block_mean(const SimilarityHeatmap& h);

}  // namespace replab

#endif
