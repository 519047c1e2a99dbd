#include "vae.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rng.hpp"

namespace replab {

namespace {

constexpr double kDivergenceCap = 1e8;
constexpr std::uint64_t kInitStreamTag = 0x696e6974ULL;
constexpr std::uint64_t kBatchStreamTag = 0x62617463ULL;
constexpr std::uint64_t kNoiseStreamTag = 0x6e6f6973ULL;

double apply_activation(Activation a, double v) {
    switch (a) {
        case Activation::linear: return v;
        case Activation::relu: return v > 0.0 ? v : 0.0;
        case Activation::tanh_fn: return std::tanh(v);
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-v));
    }
    return v;
}

// Y = act(X W + b); pre-activation returned separately for the backward pass.
void dense_forward(const DenseLayer& l, const Matrix& x, Matrix& pre, Matrix& out) {
    pre = matmul(x, l.w);
    for (std::size_t i = 0; i < pre.rows(); ++i) {
        double* r = pre.row(i);
        for (std::size_t j = 0; j < pre.cols(); ++j) r[j] += l.b[j];
    }
    if (l.act == Activation::linear) {
        out = pre;
        return;
    }
    out = Matrix(pre.rows(), pre.cols());
    for (std::size_t i = 0; i < pre.rows(); ++i) {
        const double* p = pre.row(i);
        double* o = out.row(i);
        for (std::size_t j = 0; j < pre.cols(); ++j) o[j] = apply_activation(l.act, p[j]);
    }
}

// d_pre from d_act given pre/act values.
Matrix activation_backward(Activation a, const Matrix& pre, const Matrix& act,
                           const Matrix& d_act) {
    if (a == Activation::linear) return d_act;
    Matrix d_pre(pre.rows(), pre.cols());
    for (std::size_t i = 0; i < pre.rows(); ++i) {
        const double* p = pre.row(i);
        const double* v = act.row(i);
        const double* g = d_act.row(i);
        double* o = d_pre.row(i);
        for (std::size_t j = 0; j < pre.cols(); ++j) {
            switch (a) {
                case Activation::relu: o[j] = p[j] > 0.0 ? g[j] : 0.0; break;
                case Activation::tanh_fn: o[j] = g[j] * (1.0 - v[j] * v[j]); break;
                case Activation::sigmoid: o[j] = g[j] * v[j] * (1.0 - v[j]); break;
                case Activation::linear: o[j] = g[j]; break;
            }
        }
    }
    return d_pre;
}

std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> s(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) s[j] += r[j];
    }
    return s;
}

double logsumexp(const std::vector<double>& v) {
    double mx = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

double recon_scale(const std::string& reduction, std::size_t pixels) {
    if (reduction == "sum") return 1.0;
    if (reduction == "mean") return 1.0 / static_cast<double>(pixels);
    throw InvalidInputError("recon_reduction must be 'sum' or 'mean'");
}

}  // namespace

ObjectiveKind objective_kind_from_string(const std::string& s) {
    if (s == "vanilla") return ObjectiveKind::vanilla;
    if (s == "beta") return ObjectiveKind::beta;
    if (s == "annealed") return ObjectiveKind::annealed;
    if (s == "beta_tc" || s == "beta-tc") return ObjectiveKind::beta_tc;
    if (s == "dip_ii" || s == "dip-ii") return ObjectiveKind::dip_ii;
    throw InvalidInputError("unknown objective kind '" + s + "'");
}

std::string to_string(ObjectiveKind k) {
    switch (k) {
        case ObjectiveKind::vanilla: return "vanilla";
        case ObjectiveKind::beta: return "beta";
        case ObjectiveKind::annealed: return "annealed";
        case ObjectiveKind::beta_tc: return "beta_tc";
        case ObjectiveKind::dip_ii: return "dip_ii";
    }
    return "?";
}

double ObjectiveSpec::capacity_at(std::size_t step) const {
    if (anneal_steps == 0) return c_max;
    double frac = static_cast<double>(step) / static_cast<double>(anneal_steps);
    return c_max * std::min(1.0, frac);
}

ObjectiveSpec ObjectiveSpec::parse(const std::string& text) {
    ObjectiveSpec spec;
    std::size_t colon = text.find(':');
    spec.kind = objective_kind_from_string(text.substr(0, colon));
    if (colon == std::string::npos) return spec;

    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw InvalidInputError("objective spec: expected key=value, got '" + item + "'");
        std::string key = item.substr(0, eq);
        double value = 0.0;
        try {
            value = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw InvalidInputError("objective spec: bad value in '" + item + "'");
        }
        if (key == "beta") spec.beta = value;
        else if (key == "gamma") spec.gamma = value;
        else if (key == "c_max") spec.c_max = value;
        else if (key == "anneal_steps") spec.anneal_steps = static_cast<std::size_t>(value);
        else if (key == "tc_lambda") spec.tc_lambda = value;
        else if (key == "lambda_od") spec.lambda_od = value;
        else if (key == "lambda_d") spec.lambda_d = value;
        else if (key == "lambda") { spec.lambda_od = value; spec.lambda_d = value; }
        else throw InvalidInputError("objective spec: unknown key '" + key + "'");
    }
    if (spec.kind == ObjectiveKind::beta && spec.beta < 1.0)
        throw InvalidInputError("objective spec: beta must be >= 1");
    return spec;
}

std::string ObjectiveSpec::to_spec_string() const {
    char buf[200];
    switch (kind) {
        case ObjectiveKind::vanilla: return "vanilla";
        case ObjectiveKind::beta:
            std::snprintf(buf, sizeof(buf), "beta:beta=%g", beta);
            break;
        case ObjectiveKind::annealed:
            std::snprintf(buf, sizeof(buf), "annealed:gamma=%g,c_max=%g,anneal_steps=%zu", gamma,
                          c_max, anneal_steps);
            break;
        case ObjectiveKind::beta_tc:
            std::snprintf(buf, sizeof(buf), "beta_tc:tc_lambda=%g", tc_lambda);
            break;
        case ObjectiveKind::dip_ii:
            std::snprintf(buf, sizeof(buf), "dip_ii:lambda_od=%g,lambda_d=%g", lambda_od,
                          lambda_d);
            break;
    }
    return buf;
}

ObjectiveSpec ObjectiveSpec::from_config(const ExperimentConfig& cfg) {
    ObjectiveSpec spec;
    spec.kind = objective_kind_from_string(cfg.objective);
    spec.beta = cfg.beta;
    spec.gamma = cfg.gamma;
    spec.c_max = cfg.c_max;
    spec.anneal_steps = cfg.anneal_steps;
    spec.tc_lambda = cfg.tc_lambda;
    spec.lambda_od = cfg.lambda_od;
    spec.lambda_d = cfg.lambda_d;
    return spec;
}

std::vector<std::string> VaeModel::parameter_layer_names() const {
    std::vector<std::string> names;
    names.reserve(layers.size());
    for (const DenseLayer& l : layers) names.push_back(l.name);
    return names;
}

std::size_t VaeModel::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += l.w.size() + l.b.size();
    return n;
}

VaeModel make_vae(const ExperimentConfig& cfg, std::uint64_t seed) {
    VaeModel m;
    m.input_dim = cfg.canvas_width * cfg.canvas_width;
    m.latent_dim = cfg.latent_dim;
    m.n_enc_hidden = cfg.enc_hidden.size();
    m.n_dec_hidden = cfg.dec_hidden.size();
    m.objective = ObjectiveSpec::from_config(cfg);

    Rng rng = Rng::derive(seed, kInitStreamTag);
    auto add_layer = [&](const std::string& name, std::size_t fan_in, std::size_t fan_out,
                         Activation act) {
        DenseLayer l;
        l.name = name;
        l.act = act;
        l.w = Matrix(fan_in, fan_out);
        double scale = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t i = 0; i < fan_in; ++i)
            for (std::size_t j = 0; j < fan_out; ++j) l.w(i, j) = scale * rng.next_normal();
        l.b.assign(fan_out, 0.0);
        m.layers.push_back(std::move(l));
    };

    std::size_t in = m.input_dim;
    for (std::size_t i = 0; i < cfg.enc_hidden.size(); ++i) {
        add_layer("enc_" + std::to_string(i + 1), in, cfg.enc_hidden[i], Activation::relu);
        in = cfg.enc_hidden[i];
    }
    add_layer("mean", in, m.latent_dim, Activation::linear);
    add_layer("logvar", in, m.latent_dim, Activation::linear);
    in = m.latent_dim;
    for (std::size_t i = 0; i < cfg.dec_hidden.size(); ++i) {
        add_layer("dec_" + std::to_string(i + 1), in, cfg.dec_hidden[i], Activation::tanh_fn);
        in = cfg.dec_hidden[i];
    }
    add_layer("output", in, m.input_dim, Activation::sigmoid);
    return m;
}

ForwardPass forward(const VaeModel& m, Matrix x, Matrix eps) {
    if (x.cols() != m.input_dim) throw InvalidInputError("forward: input width mismatch");
    if (eps.rows() != x.rows() || eps.cols() != m.latent_dim)
        throw InvalidInputError("forward: eps shape mismatch");

    ForwardPass f;
    f.x = std::move(x);
    f.eps = std::move(eps);

    const Matrix* cur = &f.x;
    f.enc_pre.resize(m.n_enc_hidden);
    f.enc_act.resize(m.n_enc_hidden);
    for (std::size_t i = 0; i < m.n_enc_hidden; ++i) {
        dense_forward(m.enc_hidden(i), *cur, f.enc_pre[i], f.enc_act[i]);
        cur = &f.enc_act[i];
    }
    Matrix unused;
    dense_forward(m.mean_head(), *cur, unused, f.mu);
    dense_forward(m.logvar_head(), *cur, unused, f.logvar);

    const std::size_t b = f.x.rows(), d = m.latent_dim;
    f.sigma = Matrix(b, d);
    f.z = Matrix(b, d);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            f.sigma(i, j) = std::exp(0.5 * f.logvar(i, j));
            f.z(i, j) = f.mu(i, j) + f.sigma(i, j) * f.eps(i, j);
        }

    cur = &f.z;
    f.dec_pre.resize(m.n_dec_hidden);
    f.dec_act.resize(m.n_dec_hidden);
    for (std::size_t i = 0; i < m.n_dec_hidden; ++i) {
        dense_forward(m.dec_hidden(i), *cur, f.dec_pre[i], f.dec_act[i]);
        cur = &f.dec_act[i];
    }
    dense_forward(m.output_layer(), *cur, f.out_pre, f.y);
    return f;
}

ElboTerms elbo_terms(const ForwardPass& f, double clip, const std::string& reduction) {
    const std::size_t b = f.x.rows(), pixels = f.x.cols(), d = f.mu.cols();
    const double rho = recon_scale(reduction, pixels);
    ElboTerms t;
    t.kl_per_dim.assign(d, 0.0);

    double recon = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double* xv = f.x.row(i);
        const double* yv = f.y.row(i);
        for (std::size_t p = 0; p < pixels; ++p) {
            double yc = std::clamp(yv[p], clip, 1.0 - clip);
            recon += xv[p] * std::log(yc) + (1.0 - xv[p]) * std::log(1.0 - yc);
        }
    }
    t.recon = rho * recon / static_cast<double>(b);

    for (std::size_t i = 0; i < b; ++i) {
        const double* mu = f.mu.row(i);
        const double* lv = f.logvar.row(i);
        for (std::size_t j = 0; j < d; ++j)
            t.kl_per_dim[j] += 0.5 * (mu[j] * mu[j] + std::exp(lv[j]) - 1.0 - lv[j]);
    }
    for (double& v : t.kl_per_dim) {
        v /= static_cast<double>(b);
        t.kl += v;
    }
    return t;
}

double tc_log_qz_estimate(const Matrix& mu, const Matrix& logvar, const Matrix& z,
                          std::size_t n_total) {
    const std::size_t m = z.rows(), d = z.cols();
    const double log_nm = std::log(static_cast<double>(n_total) * static_cast<double>(m));
    constexpr double half_log_2pi = 0.9189385332046727;  // log(2*pi)/2

    double acc = 0.0;
    std::vector<double> terms(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double diff = z(i, j) - mu(k, j);
                s += -half_log_2pi - 0.5 * logvar(k, j) -
                     0.5 * diff * diff / std::exp(logvar(k, j));
            }
            terms[k] = s;
        }
        acc += logsumexp(terms) - log_nm;
    }
    return acc / static_cast<double>(m);
}

double total_correlation(const Matrix& mu, const Matrix& logvar, const Matrix& z,
                         std::size_t n_total) {
    const std::size_t m = z.rows(), d = z.cols();
    double tc = tc_log_qz_estimate(mu, logvar, z, n_total);
    for (std::size_t j = 0; j < d; ++j) {
        Matrix muj(m, 1), lvj(m, 1), zj(m, 1);
        for (std::size_t i = 0; i < m; ++i) {
            muj(i, 0) = mu(i, j);
            lvj(i, 0) = logvar(i, j);
            zj(i, 0) = z(i, j);
        }
        tc -= tc_log_qz_estimate(muj, lvj, zj, n_total);
    }
    return tc;
}

Matrix dip_covariance(const Matrix& mu, const Matrix& logvar) {
    const std::size_t b = mu.rows(), d = mu.cols();
    std::vector<double> mean(d, 0.0), var_mean(d, 0.0);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            mean[j] += mu(i, j);
            var_mean[j] += std::exp(logvar(i, j));
        }
    for (std::size_t j = 0; j < d; ++j) {
        mean[j] /= static_cast<double>(b);
        var_mean[j] /= static_cast<double>(b);
    }
    Matrix cov(d, d);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t a = 0; a < d; ++a) {
            double da = mu(i, a) - mean[a];
            for (std::size_t c = 0; c < d; ++c) cov(a, c) += da * (mu(i, c) - mean[c]);
        }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t c = 0; c < d; ++c) cov(a, c) /= static_cast<double>(b);
        cov(a, a) += var_mean[a];
    }
    return cov;
}

double dip_penalty(const Matrix& cov, double lambda_od, double lambda_d) {
    double p = 0.0;
    for (std::size_t a = 0; a < cov.rows(); ++a)
        for (std::size_t c = 0; c < cov.cols(); ++c) {
            if (a == c) {
                double diff = cov(a, a) - 1.0;
                p += lambda_d * diff * diff;
            } else {
                p += lambda_od * cov(a, c) * cov(a, c);
            }
        }
    return p;
}

std::pair<LossBreakdown, Gradients> backprop(const VaeModel& m, const ForwardPass& f,
                                             const ObjectiveSpec& obj, std::size_t step,
                                             std::size_t n_total, double clip,
                                             const std::string& reduction) {
    const std::size_t b = f.x.rows(), pixels = f.x.cols(), d = m.latent_dim;
    const double bn = static_cast<double>(b);
    const double rho = recon_scale(reduction, pixels);

    LossBreakdown lb;
    ElboTerms terms = elbo_terms(f, clip, reduction);
    lb.recon = terms.recon;
    lb.kl = terms.kl;
    lb.kl_per_dim = terms.kl_per_dim;

    // Objective value (to be maximized); loss = -objective.
    double kl_coeff = 0.0;  // weight on the analytic KL inside the loss
    switch (obj.kind) {
        case ObjectiveKind::vanilla: kl_coeff = 1.0; break;
        case ObjectiveKind::beta: kl_coeff = obj.beta; break;
        case ObjectiveKind::annealed: {
            lb.capacity = obj.capacity_at(step);
            kl_coeff = obj.gamma * (terms.kl >= lb.capacity ? 1.0 : -1.0);
            break;
        }
        case ObjectiveKind::beta_tc: kl_coeff = 1.0; break;
        case ObjectiveKind::dip_ii: kl_coeff = 1.0; break;
    }

    if (obj.kind == ObjectiveKind::beta_tc)
        lb.tc = total_correlation(f.mu, f.logvar, f.z, n_total);
    if (obj.kind == ObjectiveKind::dip_ii)
        lb.dip = dip_penalty(dip_covariance(f.mu, f.logvar), obj.lambda_od, obj.lambda_d);

    switch (obj.kind) {
        case ObjectiveKind::vanilla: lb.total = -(terms.recon - terms.kl); break;
        case ObjectiveKind::beta: lb.total = -(terms.recon - obj.beta * terms.kl); break;
        case ObjectiveKind::annealed:
            lb.total = -(terms.recon - obj.gamma * std::fabs(terms.kl - lb.capacity));
            break;
        case ObjectiveKind::beta_tc:
            lb.total = -(terms.recon - terms.kl - obj.tc_lambda * lb.tc);
            break;
        case ObjectiveKind::dip_ii:
            lb.total = -(terms.recon - terms.kl - lb.dip);
            break;
    }

    // ---- backward ----
    Gradients g;
    g.dw.resize(m.layers.size());
    g.db.resize(m.layers.size());

    // recon path: d(loss)/d(out_pre) = -(rho/b)(x - y), zero where the
    // clipped likelihood is locally constant.
    Matrix d_out_pre(b, pixels);
    for (std::size_t i = 0; i < b; ++i) {
        const double* xv = f.x.row(i);
        const double* yv = f.y.row(i);
        double* o = d_out_pre.row(i);
        for (std::size_t p = 0; p < pixels; ++p)
            o[p] = (yv[p] > clip && yv[p] < 1.0 - clip) ? -(rho / bn) * (xv[p] - yv[p]) : 0.0;
    }

    const std::size_t out_idx = m.layers.size() - 1;
    const Matrix& out_in = m.n_dec_hidden > 0 ? f.dec_act[m.n_dec_hidden - 1] : f.z;
    g.dw[out_idx] = crossprod(out_in, d_out_pre);
    g.db[out_idx] = column_sums(d_out_pre);
    Matrix d_cur = tcrossprod(d_out_pre, m.output_layer().w);

    for (std::size_t i = m.n_dec_hidden; i-- > 0;) {
        Matrix d_pre = activation_backward(Activation::tanh_fn, f.dec_pre[i], f.dec_act[i], d_cur);
        const Matrix& in = i == 0 ? f.z : f.dec_act[i - 1];
        std::size_t idx = m.n_enc_hidden + 2 + i;
        g.dw[idx] = crossprod(in, d_pre);
        g.db[idx] = column_sums(d_pre);
        d_cur = tcrossprod(d_pre, m.dec_hidden(i).w);
    }
    Matrix d_z = std::move(d_cur);  // b x d

    Matrix d_mu(b, d), d_logvar(b, d);

    // analytic KL path
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            d_mu(i, j) = kl_coeff * f.mu(i, j) / bn;
            d_logvar(i, j) = kl_coeff * 0.5 * (std::exp(f.logvar(i, j)) - 1.0) / bn;
        }

    // total-correlation path
    if (obj.kind == ObjectiveKind::beta_tc && obj.tc_lambda != 0.0) {
        const double lam = obj.tc_lambda;
        const double mn = static_cast<double>(b);
        // log-density table: logq[j](i,k) = log N(z_ji ; mu_jk, var_jk)
        std::vector<Matrix> logq(d, Matrix(b, b));
        constexpr double half_log_2pi = 0.9189385332046727;
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t k = 0; k < b; ++k) {
                    double diff = f.z(i, j) - f.mu(k, j);
                    logq[j](i, k) = -half_log_2pi - 0.5 * f.logvar(k, j) -
                                    0.5 * diff * diff / std::exp(f.logvar(k, j));
                }
        // softmax weights of the joint and of each marginal
        Matrix w_joint(b, b);
        std::vector<double> row(b);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t k = 0; k < b; ++k) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) s += logq[j](i, k);
                row[k] = s;
            }
            double lse = logsumexp(row);
            for (std::size_t k = 0; k < b; ++k) w_joint(i, k) = std::exp(row[k] - lse);
        }
        for (std::size_t j = 0; j < d; ++j) {
            Matrix w_marg(b, b);
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t k = 0; k < b; ++k) row[k] = logq[j](i, k);
                double lse = logsumexp(row);
                for (std::size_t k = 0; k < b; ++k) w_marg(i, k) = std::exp(row[k] - lse);
            }
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t k = 0; k < b; ++k) {
                    double coef = lam * (w_joint(i, k) - w_marg(i, k)) / mn;
                    if (coef == 0.0) continue;
                    double var = std::exp(f.logvar(k, j));
                    double diff = f.z(i, j) - f.mu(k, j);
                    d_z(i, j) += coef * (-diff / var);
                    d_mu(k, j) += coef * (diff / var);
                    d_logvar(k, j) += coef * (-0.5 + 0.5 * diff * diff / var);
                }
        }
    }

    // dip-ii moment-matching path
    if (obj.kind == ObjectiveKind::dip_ii) {
        Matrix cov = dip_covariance(f.mu, f.logvar);
        std::vector<double> mean(d, 0.0);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < d; ++j) mean[j] += f.mu(i, j) / bn;
        Matrix gd(d, d);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t c = 0; c < d; ++c)
                gd(a, c) = a == c ? 2.0 * obj.lambda_d * (cov(a, a) - 1.0)
                                  : 2.0 * obj.lambda_od * cov(a, c);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t a = 0; a < d; ++a) {
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c) acc += gd(a, c) * (f.mu(i, c) - mean[c]);
                d_mu(i, a) += 2.0 * acc / bn;
                d_logvar(i, a) += gd(a, a) * std::exp(f.logvar(i, a)) / bn;
            }
    }

    // reparameterization: z = mu + sigma*eps with sigma = exp(logvar/2)
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            d_mu(i, j) += d_z(i, j);
            d_logvar(i, j) += d_z(i, j) * 0.5 * f.sigma(i, j) * f.eps(i, j);
        }

    const Matrix& head_in = m.n_enc_hidden > 0 ? f.enc_act[m.n_enc_hidden - 1] : f.x;
    g.dw[m.n_enc_hidden] = crossprod(head_in, d_mu);
    g.db[m.n_enc_hidden] = column_sums(d_mu);
    g.dw[m.n_enc_hidden + 1] = crossprod(head_in, d_logvar);
    g.db[m.n_enc_hidden + 1] = column_sums(d_logvar);

    Matrix d_enc = tcrossprod(d_mu, m.mean_head().w);
    Matrix d_lv_in = tcrossprod(d_logvar, m.logvar_head().w);
    for (std::size_t i = 0; i < d_enc.rows(); ++i) {
        double* a = d_enc.row(i);
        const double* c = d_lv_in.row(i);
        for (std::size_t j = 0; j < d_enc.cols(); ++j) a[j] += c[j];
    }

    for (std::size_t i = m.n_enc_hidden; i-- > 0;) {
        Matrix d_pre = activation_backward(Activation::relu, f.enc_pre[i], f.enc_act[i], d_enc);
        const Matrix& in = i == 0 ? f.x : f.enc_act[i - 1];
        g.dw[i] = crossprod(in, d_pre);
        g.db[i] = column_sums(d_pre);
        if (i > 0) d_enc = tcrossprod(d_pre, m.enc_hidden(i).w);
    }

    return {std::move(lb), std::move(g)};
}

LossBreakdown loss(const VaeModel& m, const ForwardPass& f, const ObjectiveSpec& obj,
                   std::size_t step, std::size_t n_total, double clip,
                   const std::string& reduction) {
    // Loss without gradients still shares the term computation.
    ElboTerms terms = elbo_terms(f, clip, reduction);
    LossBreakdown lb;
    lb.recon = terms.recon;
    lb.kl = terms.kl;
    lb.kl_per_dim = terms.kl_per_dim;
    switch (obj.kind) {
        case ObjectiveKind::vanilla: lb.total = -(terms.recon - terms.kl); break;
        case ObjectiveKind::beta: lb.total = -(terms.recon - obj.beta * terms.kl); break;
        case ObjectiveKind::annealed:
            lb.capacity = obj.capacity_at(step);
            lb.total = -(terms.recon - obj.gamma * std::fabs(terms.kl - lb.capacity));
            break;
        case ObjectiveKind::beta_tc:
            lb.tc = total_correlation(f.mu, f.logvar, f.z, n_total);
            lb.total = -(terms.recon - terms.kl - obj.tc_lambda * lb.tc);
            break;
        case ObjectiveKind::dip_ii:
            lb.dip = dip_penalty(dip_covariance(f.mu, f.logvar), obj.lambda_od, obj.lambda_d);
            lb.total = -(terms.recon - terms.kl - lb.dip);
            break;
    }
    return lb;
}

namespace {

void check_finite_loss(const LossBreakdown& lb, std::size_t step) {
    if (std::isfinite(lb.total) && std::fabs(lb.total) <= kDivergenceCap) return;
    const char* term = "total";
    if (!std::isfinite(lb.recon)) term = "reconstruction";
    else if (!std::isfinite(lb.kl)) term = "kl";
    else if (!std::isfinite(lb.tc)) term = "total-correlation";
    else if (!std::isfinite(lb.dip)) term = "dip penalty";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "training diverged at step %zu (%s term = %g)", step, term,
                  lb.total);
    throw NumericalFailureError(buf, step);
}

}  // namespace

TrainResult train(VaeModel& model, const ImageDataset& data, const ObjectiveSpec& obj,
                  const ExperimentConfig& cfg, const std::set<std::string>& frozen) {
    if (data.count() == 0) throw InvalidInputError("train: empty dataset");
    if (cfg.checkpoint_interval > 0 && cfg.steps % cfg.checkpoint_interval != 0)
        throw InvalidInputError("train: checkpoint interval must divide total steps");
    {
        auto names = model.parameter_layer_names();
        for (const std::string& f : frozen)
            if (std::find(names.begin(), names.end(), f) == names.end())
                throw InvalidInputError("train: unknown frozen layer '" + f + "'");
    }

    Rng batch_rng = Rng::derive(cfg.seed, kBatchStreamTag);
    Rng noise_rng = Rng::derive(cfg.seed, kNoiseStreamTag);

    // Adam state, one slot per parameter layer.
    std::vector<Matrix> mw, vw;
    std::vector<std::vector<double>> mb, vb;
    for (const DenseLayer& l : model.layers) {
        mw.emplace_back(l.w.rows(), l.w.cols());
        vw.emplace_back(l.w.rows(), l.w.cols());
        mb.emplace_back(l.b.size(), 0.0);
        vb.emplace_back(l.b.size(), 0.0);
    }

    TrainResult result;
    const std::size_t bsz = std::min(cfg.batch_size, data.count());
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        Matrix batch(bsz, model.input_dim);
        for (std::size_t i = 0; i < bsz; ++i) {
            std::size_t idx = static_cast<std::size_t>(batch_rng.next_below(data.count()));
            const double* src = data.images.row(idx);
            std::copy(src, src + model.input_dim, batch.row(i));
        }
        Matrix eps(bsz, model.latent_dim);
        for (std::size_t i = 0; i < bsz; ++i)
            for (std::size_t j = 0; j < model.latent_dim; ++j) eps(i, j) = noise_rng.next_normal();

        ForwardPass f = forward(model, std::move(batch), std::move(eps));
        auto [lb, grads] = backprop(model, f, obj, step, data.count(), cfg.bernoulli_clip,
                                    cfg.recon_reduction);
        check_finite_loss(lb, step);
        if (step == 0) result.initial_loss = lb.total;
        result.final_loss = lb.total;

        const double t = static_cast<double>(step + 1);
        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
        for (std::size_t li = 0; li < model.layers.size(); ++li) {
            DenseLayer& l = model.layers[li];
            if (frozen.count(l.name)) continue;
            double* w = l.w.data();
            const double* dw = grads.dw[li].data();
            double* mwp = mw[li].data();
            double* vwp = vw[li].data();
            for (std::size_t k = 0; k < l.w.size(); ++k) {
                mwp[k] = cfg.adam_beta1 * mwp[k] + (1.0 - cfg.adam_beta1) * dw[k];
                vwp[k] = cfg.adam_beta2 * vwp[k] + (1.0 - cfg.adam_beta2) * dw[k] * dw[k];
                w[k] -= cfg.learning_rate * (mwp[k] / bc1) /
                        (std::sqrt(vwp[k] / bc2) + cfg.adam_eps);
            }
            for (std::size_t k = 0; k < l.b.size(); ++k) {
                double db = grads.db[li][k];
                mb[li][k] = cfg.adam_beta1 * mb[li][k] + (1.0 - cfg.adam_beta1) * db;
                vb[li][k] = cfg.adam_beta2 * vb[li][k] + (1.0 - cfg.adam_beta2) * db * db;
                l.b[k] -= cfg.learning_rate * (mb[li][k] / bc1) /
                          (std::sqrt(vb[li][k] / bc2) + cfg.adam_eps);
            }
        }
        model.trained_steps += 1;

        if (cfg.checkpoint_interval > 0 && (step + 1) % cfg.checkpoint_interval == 0)
            result.checkpoints.push_back({step + 1, model});
    }
    return result;
}

const Matrix& ActivationCapture::layer(const std::string& name) const {
    for (std::size_t i = 0; i < layer_names.size(); ++i)
        if (layer_names[i] == name) return layers[i];
    throw InvalidInputError("capture: no layer named '" + name + "'");
}

bool ActivationCapture::has_layer(const std::string& name) const {
    return std::find(layer_names.begin(), layer_names.end(), name) != layer_names.end();
}

ActivationCapture capture_activations(const VaeModel& m, const Matrix& eval_x,
                                      std::uint64_t noise_seed) {
    if (eval_x.rows() == 0) throw InvalidInputError("capture_activations: empty evaluation set");

    Rng noise = Rng::derive(noise_seed, kNoiseStreamTag);
    Matrix eps(eval_x.rows(), m.latent_dim);
    for (std::size_t i = 0; i < eps.rows(); ++i)
        for (std::size_t j = 0; j < eps.cols(); ++j) eps(i, j) = noise.next_normal();

    ForwardPass f = forward(m, eval_x, std::move(eps));

    ActivationCapture cap;
    cap.model_id = m.model_id;
    cap.step = m.trained_steps;
    cap.eps = f.eps;
    auto add = [&](const std::string& name, Matrix v) {
        cap.layer_names.push_back(name);
        cap.layers.push_back(std::move(v));
    };
    add("input", f.x);
    for (std::size_t i = 0; i < m.n_enc_hidden; ++i)
        add("enc_" + std::to_string(i + 1), f.enc_act[i]);
    add("mean", f.mu);
    add("variance", f.sigma);
    add("sampled", f.z);
    for (std::size_t i = 0; i < m.n_dec_hidden; ++i)
        add("dec_" + std::to_string(i + 1), f.dec_act[i]);
    add("output", f.y);
    return cap;
}

}  // namespace replab
