#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "errors.hpp"

namespace replab {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InvalidInputError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw InvalidInputError("config: bad integer value for " + key + ": '" + v + "'");
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
    }
    if (out.empty()) throw InvalidInputError("config: empty list for " + key);
    return out;
}

std::string size_list_to_string(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::string format_double(double d) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    return buf;
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define SIZE_FIELD(name)                                                                    \
    {#name,                                                                                 \
     {[](ExperimentConfig& c, const std::string& k, const std::string& v) {                 \
          c.name = static_cast<std::size_t>(parse_u64(k, v));                               \
      },                                                                                    \
      [](const ExperimentConfig& c) { return std::to_string(c.name); }}}
#define U64_FIELD(name)                                                                     \
    {#name,                                                                                 \
     {[](ExperimentConfig& c, const std::string& k, const std::string& v) {                 \
          c.name = parse_u64(k, v);                                                         \
      },                                                                                    \
      [](const ExperimentConfig& c) { return std::to_string(c.name); }}}
#define DBL_FIELD(name)                                                                     \
    {#name,                                                                                 \
     {[](ExperimentConfig& c, const std::string& k, const std::string& v) {                 \
          c.name = parse_double(k, v);                                                      \
      },                                                                                    \
      [](const ExperimentConfig& c) { return format_double(c.name); }}}
#define STR_FIELD(name)                                                                     \
    {#name,                                                                                 \
     {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.name = v; },    \
      [](const ExperimentConfig& c) { return c.name; }}}
#define LIST_FIELD(name)                                                                    \
    {#name,                                                                                 \
     {[](ExperimentConfig& c, const std::string& k, const std::string& v) {                 \
          c.name = parse_size_list(k, v);                                                   \
      },                                                                                    \
      [](const ExperimentConfig& c) { return size_list_to_string(c.name); }}}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> f = {
        SIZE_FIELD(canvas_width),
        LIST_FIELD(enc_hidden),
        LIST_FIELD(dec_hidden),
        SIZE_FIELD(latent_dim),
        SIZE_FIELD(batch_size),
        SIZE_FIELD(steps),
        SIZE_FIELD(checkpoint_interval),
        DBL_FIELD(learning_rate),
        DBL_FIELD(adam_beta1),
        DBL_FIELD(adam_beta2),
        DBL_FIELD(adam_eps),
        U64_FIELD(seed),
        SIZE_FIELD(dataset_size),
        DBL_FIELD(bernoulli_clip),
        STR_FIELD(recon_reduction),
        STR_FIELD(objective),
        DBL_FIELD(beta),
        DBL_FIELD(gamma),
        DBL_FIELD(c_max),
        SIZE_FIELD(anneal_steps),
        DBL_FIELD(tc_lambda),
        DBL_FIELD(lambda_od),
        DBL_FIELD(lambda_d),
        SIZE_FIELD(eval_examples),
        U64_FIELD(eval_seed),
        U64_FIELD(noise_seed),
        DBL_FIELD(passive_kl_threshold),
        DBL_FIELD(passive_mu_threshold),
        DBL_FIELD(passive_sigma_low),
        DBL_FIELD(passive_sigma_high),
        SIZE_FIELD(collapse_threshold_dims),
        SIZE_FIELD(probe_iters),
        DBL_FIELD(probe_lr),
        DBL_FIELD(probe_train_fraction),
        SIZE_FIELD(retrain_steps_per_stage),
    };
    return f;
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    auto it = fields().find(key);
    if (it == fields().end()) throw InvalidInputError("config: unknown key '" + key + "'");
    it->second.set(*this, key, value);
}

std::string ExperimentConfig::get(const std::string& key) const {
    auto it = fields().find(key);
    if (it == fields().end()) throw InvalidInputError("config: unknown key '" + key + "'");
    return it->second.get(*this);
}

void ExperimentConfig::apply_text(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInputError("config: line " + std::to_string(lineno) +
                                    " is not key=value");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void ExperimentConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_text(ss.str());
}

std::string ExperimentConfig::to_text() const {
    std::string out;
    for (const auto& [key, field] : fields()) out += key + "=" + field.get(*this) + "\n";
    return out;
}

}  // namespace replab
