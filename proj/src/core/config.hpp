#ifndef REPLAB_CORE_CONFIG_HPP
#define REPLAB_CORE_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace replab {

/// Every tunable default in one flat key=value config. Unknown keys are an
/// error so typos cannot silently fall back to defaults.
struct ExperimentConfig {
    // model architecture
    std::size_t canvas_width = 12;
    std::vector<std::size_t> enc_hidden = {64, 64};
    std::vector<std::size_t> dec_hidden = {64, 64};
    std::size_t latent_dim = 5;

    // training
    std::size_t batch_size = 64;
    std::size_t steps = 3000;
    std::size_t checkpoint_interval = 500;
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    std::size_t dataset_size = 4096;
    double bernoulli_clip = 1e-7;
    std::string recon_reduction = "sum";  // per-pixel reduction: sum | mean

    // objective defaults
    std::string objective = "vanilla";  // vanilla|beta|annealed|beta_tc|dip_ii
    double beta = 1.0;
    double gamma = 30.0;
    double c_max = 5.0;
    std::size_t anneal_steps = 2000;
    double tc_lambda = 4.0;
    double lambda_od = 5.0;
    double lambda_d = 5.0;

    // evaluation / capture
    std::size_t eval_examples = 512;
    std::uint64_t eval_seed = 9999;
    std::uint64_t noise_seed = 4242;  // capture-time reparameterization noise

    // diagnostics thresholds (operationalize "very close to 0 / to 1")
    double passive_kl_threshold = 0.05;
    double passive_mu_threshold = 0.1;
    double passive_sigma_low = 0.8;
    double passive_sigma_high = 1.2;
    std::size_t collapse_threshold_dims = 0;

    // latent probe
    std::size_t probe_iters = 500;
    double probe_lr = 0.1;
    double probe_train_fraction = 0.8;

    // progressive decoder retraining
    std::size_t retrain_steps_per_stage = 500;

    /// Parses key=value lines ('#' comments, blank lines ignored) over the
    /// current values. Throws InvalidInputError on unknown keys or bad values.
    void apply_text(const std::string& text);
    void apply_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    /// Full dump in the same key=value format; parses back to an equal config.
    std::string to_text() const;
};

}  // namespace replab

#endif
