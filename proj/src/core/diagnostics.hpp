#ifndef REPLAB_CORE_DIAGNOSTICS_HPP
#define REPLAB_CORE_DIAGNOSTICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "synthdata.hpp"
#include "vae.hpp"

namespace replab {

enum class CollapseVerdict { healthy_polarised, collapsed, no_passive_dims };

std::string to_string(CollapseVerdict v);

struct DimStats {
    double kl_nats = 0.0;
    double mean_abs_mu = 0.0;
    double mean_sigma = 0.0;
    bool active = false;
};

struct LatentDiagnostics {
    std::vector<DimStats> dims;
    std::size_t active_count = 0;
    std::size_t passive_count = 0;
    CollapseVerdict verdict = CollapseVerdict::no_passive_dims;
};

/// Closed-form Gaussian KL per dimension from the captured mean/variance
/// layers, averaged over examples.
std::vector<double> per_dim_kl_from_capture(const ActivationCapture& cap);

/// A dimension is passive when its KL, |mu| and sigma statistics sit at the
/// prior (thresholds from config). Verdict is collapsed when the active count
/// does not exceed collapse_threshold_dims.
LatentDiagnostics latent_stats(const ActivationCapture& cap, const std::vector<double>& per_dim_kl,
                               const ExperimentConfig& cfg);

/// Per-dimension CSV plus a one-line verdict record.
std::string diagnostics_to_csv(const LatentDiagnostics& d);

struct SignatureRow {
    std::string rep_b;    // mean | variance | sampled
    std::string layer_a;  // any layer of the reference capture
    double cka = 0.0;
};

/// CKA of model b's latent representations against every layer of model a.
std::vector<SignatureRow> collapse_similarity_signature(const ActivationCapture& a,
                                                        const ActivationCapture& b);

/// Rendered side-by-side grid: n rows of (target input, reconstruction
/// through the model), pixel values in [0,1].
struct GridImage {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Matrix pixels;
};

GridImage transfer_reconstruction_grid(const VaeModel& model, const Matrix& target_images,
                                       std::size_t n_examples, std::uint64_t noise_seed,
                                       std::size_t canvas_width);

/// Per-pixel reconstruction MSE over an evaluation set under fixed noise.
double reconstruction_mse(const VaeModel& model, const Matrix& eval_x, std::uint64_t noise_seed);

/// Multinomial softmax probe: full-batch gradient descent from zero init,
/// leading train_fraction rows train, remainder held out. Returns held-out
/// accuracy.
double latent_probe(const Matrix& latents, const std::vector<int>& labels, double train_fraction,
                    std::size_t iters = 500, double learning_rate = 0.1);

/// Majority-class share; the chance level a probe is compared against.
double chance_accuracy(const std::vector<int>& labels);

enum class UnfreezeOrder { innermost_first, outermost_first };

UnfreezeOrder unfreeze_order_from_string(const std::string& s);

struct RetrainStage {
    std::size_t unfrozen_layers = 0;
    double mse = 0.0;
};

/// Stage k retrains a copy of the source model on the target data with the
/// encoder frozen and the first k decoder-side layers (in the given order)
/// unfrozen. Stage 0 is the frozen-transfer baseline.
std::vector<RetrainStage> progressive_decoder_retrain(const VaeModel& source_model,
                                                      const ImageDataset& target,
                                                      UnfreezeOrder order, std::size_t stages,
                                                      std::size_t steps_per_stage,
                                                      const ExperimentConfig& cfg);

}  // namespace replab

#endif
