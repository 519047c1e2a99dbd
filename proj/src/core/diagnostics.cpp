#include "diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace replab {

std::string to_string(CollapseVerdict v) {
    switch (v) {
        case CollapseVerdict::healthy_polarised: return "healthy_polarised";
        case CollapseVerdict::collapsed: return "collapsed";
        case CollapseVerdict::no_passive_dims: return "no_passive_dims";
    }
    return "?";
}

std::vector<double> per_dim_kl_from_capture(const ActivationCapture& cap) {
    const Matrix& mu = cap.layer("mean");
    const Matrix& sigma = cap.layer("variance");
    const std::size_t n = mu.rows(), d = mu.cols();
    std::vector<double> kl(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double s2 = sigma(i, j) * sigma(i, j);
            kl[j] += 0.5 * (mu(i, j) * mu(i, j) + s2 - 1.0 - std::log(s2));
        }
    for (double& v : kl) v /= static_cast<double>(n);
    return kl;
}

LatentDiagnostics latent_stats(const ActivationCapture& cap, const std::vector<double>& per_dim_kl,
                               const ExperimentConfig& cfg) {
    const Matrix& mu = cap.layer("mean");
    const Matrix& sigma = cap.layer("variance");
    const std::size_t n = mu.rows(), d = mu.cols();
    if (per_dim_kl.size() != d)
        throw InvalidInputError("latent_stats: kl vector length != latent dimension");

    LatentDiagnostics out;
    out.dims.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        DimStats& s = out.dims[j];
        s.kl_nats = per_dim_kl[j];
        for (std::size_t i = 0; i < n; ++i) {
            s.mean_abs_mu += std::fabs(mu(i, j));
            s.mean_sigma += sigma(i, j);
        }
        s.mean_abs_mu /= static_cast<double>(n);
        s.mean_sigma /= static_cast<double>(n);
        bool passive = s.kl_nats < cfg.passive_kl_threshold &&
                       s.mean_abs_mu < cfg.passive_mu_threshold &&
                       s.mean_sigma >= cfg.passive_sigma_low &&
                       s.mean_sigma <= cfg.passive_sigma_high;
        s.active = !passive;
        if (s.active) ++out.active_count;
        else ++out.passive_count;
    }
    if (out.active_count <= cfg.collapse_threshold_dims)
        out.verdict = CollapseVerdict::collapsed;
    else if (out.passive_count > 0)
        out.verdict = CollapseVerdict::healthy_polarised;
    else
        out.verdict = CollapseVerdict::no_passive_dims;
    return out;
}

std::string diagnostics_to_csv(const LatentDiagnostics& d) {
    std::string out = "dim,kl_nats,mean_abs_mu,mean_sigma,status\n";
    char buf[160];
    for (std::size_t j = 0; j < d.dims.size(); ++j) {
        const DimStats& s = d.dims[j];
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%s\n", j, s.kl_nats, s.mean_abs_mu,
                      s.mean_sigma, s.active ? "active" : "passive");
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "verdict,%s,active=%zu,passive=%zu\n",
                  to_string(d.verdict).c_str(), d.active_count, d.passive_count);
    out += buf;
    return out;
}

std::vector<SignatureRow> collapse_similarity_signature(const ActivationCapture& a,
                                                        const ActivationCapture& b) {
    static const char* reps[] = {"mean", "variance", "sampled"};
    std::vector<SignatureRow> rows;
    for (const char* rep : reps) {
        const Matrix& rb = b.layer(rep);
        for (std::size_t i = 0; i < a.layer_names.size(); ++i) {
            if (a.layers[i].rows() != rb.rows())
                throw InvalidInputError("collapse_similarity_signature: captures evaluated on "
                                        "different example counts");
            rows.push_back({rep, a.layer_names[i], linear_cka(a.layers[i], rb).value});
        }
    }
    return rows;
}

GridImage transfer_reconstruction_grid(const VaeModel& model, const Matrix& target_images,
                                       std::size_t n_examples, std::uint64_t noise_seed,
                                       std::size_t canvas_width) {
    const std::size_t w = canvas_width;
    if (target_images.cols() != w * w)
        throw InvalidInputError("transfer_reconstruction_grid: canvas size mismatch");
    if (n_examples == 0 || n_examples > target_images.rows())
        throw InvalidInputError("transfer_reconstruction_grid: bad example count");

    Matrix subset(n_examples, w * w);
    for (std::size_t i = 0; i < n_examples; ++i)
        std::copy(target_images.row(i), target_images.row(i) + w * w, subset.row(i));
    ActivationCapture cap = capture_activations(model, subset, noise_seed);
    const Matrix& recon = cap.layer("output");

    // n rows x 2 columns of w-by-w tiles, 1px mid-gray separators.
    const std::size_t gap = 1;
    GridImage grid;
    grid.rows = n_examples * w + (n_examples - 1) * gap;
    grid.cols = 2 * w + gap;
    grid.pixels = Matrix(grid.rows, grid.cols, 0.5);
    for (std::size_t i = 0; i < n_examples; ++i) {
        std::size_t ry = i * (w + gap);
        for (std::size_t y = 0; y < w; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                grid.pixels(ry + y, x) = subset(i, y * w + x);
                grid.pixels(ry + y, w + gap + x) = std::clamp(recon(i, y * w + x), 0.0, 1.0);
            }
    }
    return grid;
}

double reconstruction_mse(const VaeModel& model, const Matrix& eval_x, std::uint64_t noise_seed) {
    ActivationCapture cap = capture_activations(model, eval_x, noise_seed);
    const Matrix& y = cap.layer("output");
    double acc = 0.0;
    for (std::size_t i = 0; i < eval_x.rows(); ++i) {
        const double* xv = eval_x.row(i);
        const double* yv = y.row(i);
        for (std::size_t p = 0; p < eval_x.cols(); ++p) {
            double diff = xv[p] - yv[p];
            acc += diff * diff;
        }
    }
    return acc / static_cast<double>(eval_x.rows() * eval_x.cols());
}

double latent_probe(const Matrix& latents, const std::vector<int>& labels, double train_fraction,
                    std::size_t iters, double learning_rate) {
    const std::size_t n = latents.rows();
    if (labels.size() != n) throw InvalidInputError("latent_probe: label count != row count");
    if (!(train_fraction > 0.0) || train_fraction >= 1.0)
        throw InvalidInputError("latent_probe: train_fraction outside (0,1)");
    const auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(n));
    if (n_train == 0 || n_train == n)
        throw InvalidInputError("latent_probe: split leaves an empty partition");

    // Remap labels to a dense 0..C-1 index.
    std::map<int, int> classes;
    for (std::size_t i = 0; i < n_train; ++i) classes.emplace(labels[i], 0);
    if (classes.size() < 2)
        throw InvalidInputError("latent_probe: training split has a single class");
    int next = 0;
    for (auto& [label, idx] : classes) idx = next++;
    const std::size_t c = classes.size();
    const std::size_t p = latents.cols();

    // Softmax regression, bias as an extra input column, zero init.
    Matrix w(p + 1, c);
    std::vector<double> logits(c);
    Matrix grad(p + 1, c);
    for (std::size_t it = 0; it < iters; ++it) {
        std::fill(grad.data(), grad.data() + grad.size(), 0.0);
        for (std::size_t i = 0; i < n_train; ++i) {
            const double* xv = latents.row(i);
            for (std::size_t k = 0; k < c; ++k) {
                double s = w(p, k);
                for (std::size_t j = 0; j < p; ++j) s += xv[j] * w(j, k);
                logits[k] = s;
            }
            double mx = *std::max_element(logits.begin(), logits.end());
            double denom = 0.0;
            for (double& v : logits) {
                v = std::exp(v - mx);
                denom += v;
            }
            int target = classes.at(labels[i]);
            for (std::size_t k = 0; k < c; ++k) {
                double delta = logits[k] / denom - (static_cast<int>(k) == target ? 1.0 : 0.0);
                for (std::size_t j = 0; j < p; ++j) grad(j, k) += delta * xv[j];
                grad(p, k) += delta;
            }
        }
        double scale = learning_rate / static_cast<double>(n_train);
        for (std::size_t j = 0; j <= p; ++j)
            for (std::size_t k = 0; k < c; ++k) w(j, k) -= scale * grad(j, k);
    }

    std::size_t correct = 0, evaluated = 0;
    for (std::size_t i = n_train; i < n; ++i) {
        auto it = classes.find(labels[i]);
        if (it == classes.end()) continue;  // unseen class cannot be predicted
        const double* xv = latents.row(i);
        std::size_t best = 0;
        double best_v = -1e300;
        for (std::size_t k = 0; k < c; ++k) {
            double s = w(p, k);
            for (std::size_t j = 0; j < p; ++j) s += xv[j] * w(j, k);
            if (s > best_v) {
                best_v = s;
                best = k;
            }
        }
        ++evaluated;
        if (static_cast<int>(best) == it->second) ++correct;
    }
    if (evaluated == 0) throw InvalidInputError("latent_probe: held-out split is empty");
    return static_cast<double>(correct) / static_cast<double>(evaluated);
}

double chance_accuracy(const std::vector<int>& labels) {
    if (labels.empty()) throw InvalidInputError("chance_accuracy: empty labels");
    std::map<int, std::size_t> counts;
    for (int l : labels) ++counts[l];
    std::size_t best = 0;
    for (const auto& [label, count] : counts) best = std::max(best, count);
    return static_cast<double>(best) / static_cast<double>(labels.size());
}

UnfreezeOrder unfreeze_order_from_string(const std::string& s) {
    if (s == "innermost_first" || s == "innermost-first") return UnfreezeOrder::innermost_first;
    if (s == "outermost_first" || s == "outermost-first") return UnfreezeOrder::outermost_first;
    throw InvalidInputError("unknown unfreeze order '" + s + "'");
}

std::vector<RetrainStage> progressive_decoder_retrain(const VaeModel& source_model,
                                                      const ImageDataset& target,
                                                      UnfreezeOrder order, std::size_t stages,
                                                      std::size_t steps_per_stage,
                                                      const ExperimentConfig& cfg) {
    // Decoder-side layers, innermost (closest to the latent input) first.
    std::vector<std::string> decoder_layers;
    for (std::size_t i = 0; i < source_model.n_dec_hidden; ++i)
        decoder_layers.push_back("dec_" + std::to_string(i + 1));
    decoder_layers.push_back("output");
    if (order == UnfreezeOrder::outermost_first)
        std::reverse(decoder_layers.begin(), decoder_layers.end());
    if (stages > decoder_layers.size())
        throw InvalidInputError("progressive_decoder_retrain: more stages than decoder layers");

    const std::size_t n_eval = std::min<std::size_t>(cfg.eval_examples, target.count());
    Matrix eval_x(n_eval, target.images.cols());
    for (std::size_t i = 0; i < n_eval; ++i)
        std::copy(target.images.row(i), target.images.row(i) + target.images.cols(),
                  eval_x.row(i));

    ExperimentConfig stage_cfg = cfg;
    stage_cfg.steps = steps_per_stage;
    stage_cfg.checkpoint_interval = 0;
    ObjectiveSpec vanilla;  // retraining optimizes plain reconstruction + KL

    std::vector<RetrainStage> out;
    out.push_back({0, reconstruction_mse(source_model, eval_x, cfg.noise_seed)});
    for (std::size_t k = 1; k <= stages; ++k) {
        VaeModel model = source_model;
        std::set<std::string> frozen;
        for (const std::string& name : model.parameter_layer_names()) frozen.insert(name);
        for (std::size_t i = 0; i < k; ++i) frozen.erase(decoder_layers[i]);
        train(model, target, vanilla, stage_cfg, frozen);
        out.push_back({k, reconstruction_mse(model, eval_x, cfg.noise_seed)});
    }
    return out;
}

}  // namespace replab
