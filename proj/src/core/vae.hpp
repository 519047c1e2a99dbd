#ifndef REPLAB_CORE_VAE_HPP
#define REPLAB_CORE_VAE_HPP

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "matrix.hpp"
#include "synthdata.hpp"

namespace replab {

enum class Activation : std::uint8_t { linear = 0, relu = 1, tanh_fn = 2, sigmoid = 3 };

struct DenseLayer {
    std::string name;
    Matrix w;                // fan_in x fan_out
    std::vector<double> b;   // fan_out
    Activation act = Activation::linear;
};

enum class ObjectiveKind : std::uint8_t {
    vanilla = 0,
    beta = 1,
    annealed = 2,
    beta_tc = 3,
    dip_ii = 4
};

ObjectiveKind objective_kind_from_string(const std::string& s);
std::string to_string(ObjectiveKind k);

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::vanilla;
    double beta = 1.0;          // beta objective weight (vanilla == beta with 1)
    double gamma = 30.0;        // annealed divergence weight
    double c_max = 5.0;         // annealed capacity ceiling
    std::size_t anneal_steps = 2000;
    double tc_lambda = 4.0;     // beta_tc total-correlation weight
    double lambda_od = 5.0;     // dip_ii off-diagonal weight
    double lambda_d = 5.0;      // dip_ii diagonal weight

    /// Capacity at a step: linear ramp from 0 to c_max over anneal_steps.
    double capacity_at(std::size_t step) const;

    /// Parses "kind" or "kind:key=value,key=value". Keys: beta, gamma, c_max,
    /// anneal_steps, tc_lambda, lambda_od, lambda_d, lambda (sets both dip
    /// weights).
    static ObjectiveSpec parse(const std::string& text);
    std::string to_spec_string() const;

    static ObjectiveSpec from_config(const ExperimentConfig& cfg);
};

/// Fully-connected VAE: ReLU encoder stack, linear mean / log-variance heads,
/// tanh decoder stack, sigmoid output. Parameter layers in order:
/// enc_1..enc_k, mean, logvar, dec_1..dec_m, output.
struct VaeModel {
    std::size_t input_dim = 144;
    std::size_t latent_dim = 5;
    std::size_t n_enc_hidden = 2;
    std::size_t n_dec_hidden = 2;
    std::vector<DenseLayer> layers;
    std::uint64_t trained_steps = 0;
    std::string model_id;
    ObjectiveSpec objective;

    DenseLayer& enc_hidden(std::size_t i) { return layers[i]; }
    const DenseLayer& enc_hidden(std::size_t i) const { return layers[i]; }
    DenseLayer& mean_head() { return layers[n_enc_hidden]; }
    const DenseLayer& mean_head() const { return layers[n_enc_hidden]; }
    DenseLayer& logvar_head() { return layers[n_enc_hidden + 1]; }
    const DenseLayer& logvar_head() const { return layers[n_enc_hidden + 1]; }
    DenseLayer& dec_hidden(std::size_t i) { return layers[n_enc_hidden + 2 + i]; }
    const DenseLayer& dec_hidden(std::size_t i) const { return layers[n_enc_hidden + 2 + i]; }
    DenseLayer& output_layer() { return layers.back(); }
    const DenseLayer& output_layer() const { return layers.back(); }

    std::vector<std::string> parameter_layer_names() const;
    std::size_t parameter_count() const;
};

VaeModel make_vae(const ExperimentConfig& cfg, std::uint64_t seed);

/// Everything the backward pass needs from one forward evaluation.
struct ForwardPass {
    Matrix x;
    std::vector<Matrix> enc_pre, enc_act;
    Matrix mu, logvar, sigma, eps, z;
    std::vector<Matrix> dec_pre, dec_act;
    Matrix out_pre, y;
};

ForwardPass forward(const VaeModel& m, Matrix x, Matrix eps);

struct ElboTerms {
    double recon = 0.0;              // Bernoulli log-likelihood, batch mean
    double kl = 0.0;                 // closed-form Gaussian KL, batch mean
    std::vector<double> kl_per_dim;  // sums to kl
};

ElboTerms elbo_terms(const ForwardPass& f, double clip, const std::string& reduction);

struct LossBreakdown {
    double total = 0.0;  // negated objective, the quantity being minimized
    double recon = 0.0;
    double kl = 0.0;
    double capacity = 0.0;  // annealed C(step)
    double tc = 0.0;        // beta_tc total-correlation estimate
    double dip = 0.0;       // dip_ii moment-matching penalty
    std::vector<double> kl_per_dim;
};

struct Gradients {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;
};

/// Loss and analytic gradients from a shared backward pass. n_total is the
/// full dataset size used by the total-correlation estimator.
std::pair<LossBreakdown, Gradients> backprop(const VaeModel& m, const ForwardPass& f,
                                             const ObjectiveSpec& obj, std::size_t step,
                                             std::size_t n_total, double clip,
                                             const std::string& reduction);

LossBreakdown loss(const VaeModel& m, const ForwardPass& f, const ObjectiveSpec& obj,
                   std::size_t step, std::size_t n_total, double clip,
                   const std::string& reduction);

/// Minibatch estimate of E_{q(z)}[log q(z)] via log-sum-exp over
/// diagonal-Gaussian log densities, with the 1/(n m) weighting.
double tc_log_qz_estimate(const Matrix& mu, const Matrix& logvar, const Matrix& z,
                          std::size_t n_total);

/// Joint estimate minus the per-dimension marginal estimates.
double total_correlation(const Matrix& mu, const Matrix& logvar, const Matrix& z,
                         std::size_t n_total);

/// Cov_batch[mu] + mean_batch[diag(sigma^2)] (moment-matched latent covariance).
Matrix dip_covariance(const Matrix& mu, const Matrix& logvar);

double dip_penalty(const Matrix& cov, double lambda_od, double lambda_d);

struct Checkpoint {
    std::size_t step = 0;
    VaeModel model;
};

struct TrainResult {
    std::vector<Checkpoint> checkpoints;  // at each checkpoint interval
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

/// Adam training loop; deterministic for fixed (seed, config). Layers named in
/// `frozen` keep bit-identical parameters. Aborts with NumericalFailureError on
/// divergence (non-finite loss or |loss| > 1e8).
TrainResult train(VaeModel& model, const ImageDataset& data, const ObjectiveSpec& obj,
                  const ExperimentConfig& cfg, const std::set<std::string>& frozen = {});

/// Per-layer activations over an evaluation set, one shared noise draw per
/// example. Layer order: input, enc_*, mean, variance (sigma), sampled,
/// dec_*, output.
struct ActivationCapture {
    std::vector<std::string> layer_names;
    std::vector<Matrix> layers;
    Matrix eps;
    std::string model_id;
    std::uint64_t step = 0;

    const Matrix& layer(const std::string& name) const;
    bool has_layer(const std::string& name) const;
};

ActivationCapture capture_activations(const VaeModel& m, const Matrix& eval_x,
                                      std::uint64_t noise_seed);

}  // namespace replab

#endif
