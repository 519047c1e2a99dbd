#include "io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace replab {

namespace {

static_assert(sizeof(double) == 8);

// Binary formats are little-endian on disk.
template <typename T>
void put(std::string& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes, bytes + sizeof(T));
    out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
public:
    Reader(std::string bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos_ + sizeof(T) > bytes_.size()) fail("truncated file");
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T v;
        std::memcpy(&v, raw, sizeof(T));
        return v;
    }

    std::string get_string() {
        auto len = get<std::uint32_t>();
        if (len > 1u << 20) fail("unreasonable string length");
        if (pos_ + len > bytes_.size()) fail("truncated file");
        std::string s = bytes_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    void expect_magic(const char* magic) {
        if (pos_ + 4 > bytes_.size() || std::memcmp(bytes_.data() + pos_, magic, 4) != 0)
            fail(std::string("bad magic (expected ") + magic + ")");
        pos_ += 4;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

    [[noreturn]] void fail(const std::string& why) const {
        throw InvalidInputError("'" + path_ + "': " + why);
    }

private:
    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

void put_string(std::string& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

void put_matrix_payload(std::string& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) put<double>(out, m(i, j));
}

Reader read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return Reader(ss.str(), path);
}

}  // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInputError("cannot open '" + path + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw InvalidInputError("write failed for '" + path + "'");
}

void write_act(const std::string& path, const Matrix& m, const std::string& layer_name,
               const std::string& model_id, std::uint32_t epoch) {
    std::string out;
    out += "ACTV";
    put<std::uint16_t>(out, 1);
    put_string(out, layer_name);
    put_string(out, model_id);
    put<std::uint32_t>(out, epoch);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    put_matrix_payload(out, m);
    write_text_file(path, out);
}

ActFile read_act(const std::string& path) {
    Reader r = read_all(path);
    r.expect_magic("ACTV");
    if (r.get<std::uint16_t>() != 1) r.fail("unsupported version");
    ActFile f;
    f.layer_name = r.get_string();
    f.model_id = r.get_string();
    f.epoch = r.get<std::uint32_t>();
    auto rows = r.get<std::uint32_t>();
    auto cols = r.get<std::uint32_t>();
    if (r.remaining() != static_cast<std::size_t>(rows) * cols * 8)
        r.fail("payload length does not match declared dimensions");
    f.data = Matrix(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) f.data(i, j) = r.get<double>();
    f.data.validate_finite("'" + path + "'");
    return f;
}

void save_capture(const ActivationCapture& cap, const std::string& prefix) {
    for (std::size_t i = 0; i < cap.layer_names.size(); ++i)
        write_act(prefix + "_" + cap.layer_names[i] + ".act", cap.layers[i], cap.layer_names[i],
                  cap.model_id, static_cast<std::uint32_t>(cap.step));
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::string out;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j) out += ',';
        out += std::to_string(j);
    }
    out += '\n';
    char buf[40];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), j ? ",%.17g" : "%.17g", m(i, j));
            out += buf;
        }
        out += '\n';
    }
    write_text_file(path, out);
}

Matrix read_matrix_csv(const std::string& path) {
    std::stringstream ss(read_text_file(path));
    std::string line;
    if (!std::getline(ss, line)) throw InvalidInputError("'" + path + "': empty csv");
    std::vector<double> values;
    std::size_t cols = 0, rows = 0;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        std::stringstream rs(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(rs, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InvalidInputError("'" + path + "': bad number '" + cell + "'");
            }
            ++c;
        }
        if (rows == 0) cols = c;
        else if (c != cols) throw InvalidInputError("'" + path + "': ragged csv row");
        ++rows;
    }
    if (rows == 0) throw InvalidInputError("'" + path + "': no data rows");
    Matrix m(rows, cols, std::move(values));
    m.validate_finite("'" + path + "'");
    return m;
}

void write_vaec(const std::string& path, const VaeModel& m) {
    std::string out;
    out += "VAEC";
    put<std::uint16_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.input_dim));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.latent_dim));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.n_enc_hidden));
    for (std::size_t i = 0; i < m.n_enc_hidden; ++i)
        put<std::uint32_t>(out, static_cast<std::uint32_t>(m.enc_hidden(i).w.cols()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.n_dec_hidden));
    for (std::size_t i = 0; i < m.n_dec_hidden; ++i)
        put<std::uint32_t>(out, static_cast<std::uint32_t>(m.dec_hidden(i).w.cols()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(m.objective.kind));
    put<double>(out, m.objective.beta);
    put<double>(out, m.objective.gamma);
    put<double>(out, m.objective.c_max);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.objective.anneal_steps));
    put<double>(out, m.objective.tc_lambda);
    put<double>(out, m.objective.lambda_od);
    put<double>(out, m.objective.lambda_d);
    put<std::uint64_t>(out, m.trained_steps);
    put_string(out, m.model_id);
    for (const DenseLayer& l : m.layers) {
        put_matrix_payload(out, l.w);
        for (double b : l.b) put<double>(out, b);
    }
    write_text_file(path, out);
}

VaeModel read_vaec(const std::string& path) {
    Reader r = read_all(path);
    r.expect_magic("VAEC");
    if (r.get<std::uint16_t>() != 1) r.fail("unsupported version");

    ExperimentConfig cfg;
    auto input_dim = r.get<std::uint32_t>();
    auto latent_dim = r.get<std::uint32_t>();
    cfg.latent_dim = latent_dim;
    double width = std::sqrt(static_cast<double>(input_dim));
    cfg.canvas_width = static_cast<std::size_t>(width);
    if (cfg.canvas_width * cfg.canvas_width != input_dim)
        cfg.canvas_width = 0;  // non-square input; set dims explicitly below
    cfg.enc_hidden.clear();
    auto n_enc = r.get<std::uint32_t>();
    if (n_enc > 64) r.fail("unreasonable encoder depth");
    for (std::uint32_t i = 0; i < n_enc; ++i) cfg.enc_hidden.push_back(r.get<std::uint32_t>());
    cfg.dec_hidden.clear();
    auto n_dec = r.get<std::uint32_t>();
    if (n_dec > 64) r.fail("unreasonable decoder depth");
    for (std::uint32_t i = 0; i < n_dec; ++i) cfg.dec_hidden.push_back(r.get<std::uint32_t>());

    ObjectiveSpec obj;
    auto kind = r.get<std::uint8_t>();
    if (kind > 4) r.fail("bad objective kind");
    obj.kind = static_cast<ObjectiveKind>(kind);
    obj.beta = r.get<double>();
    obj.gamma = r.get<double>();
    obj.c_max = r.get<double>();
    obj.anneal_steps = static_cast<std::size_t>(r.get<std::uint64_t>());
    obj.tc_lambda = r.get<double>();
    obj.lambda_od = r.get<double>();
    obj.lambda_d = r.get<double>();
    auto steps = r.get<std::uint64_t>();
    std::string model_id = r.get_string();

    // Rebuild the skeleton, then overwrite parameters from the payload.
    VaeModel m;
    m.input_dim = input_dim;
    m.latent_dim = latent_dim;
    m.n_enc_hidden = n_enc;
    m.n_dec_hidden = n_dec;
    m.objective = obj;
    m.trained_steps = steps;
    m.model_id = model_id;
    auto add_layer = [&](const std::string& name, std::size_t fan_in, std::size_t fan_out,
                         Activation act) {
        DenseLayer l;
        l.name = name;
        l.act = act;
        l.w = Matrix(fan_in, fan_out);
        l.b.assign(fan_out, 0.0);
        m.layers.push_back(std::move(l));
    };
    std::size_t in = input_dim;
    for (std::size_t i = 0; i < cfg.enc_hidden.size(); ++i) {
        add_layer("enc_" + std::to_string(i + 1), in, cfg.enc_hidden[i], Activation::relu);
        in = cfg.enc_hidden[i];
    }
    add_layer("mean", in, latent_dim, Activation::linear);
    add_layer("logvar", in, latent_dim, Activation::linear);
    in = latent_dim;
    for (std::size_t i = 0; i < cfg.dec_hidden.size(); ++i) {
        add_layer("dec_" + std::to_string(i + 1), in, cfg.dec_hidden[i], Activation::tanh_fn);
        in = cfg.dec_hidden[i];
    }
    add_layer("output", in, input_dim, Activation::sigmoid);

    if (r.remaining() != m.parameter_count() * 8)
        r.fail("parameter payload does not match the architecture descriptor");
    for (DenseLayer& l : m.layers) {
        for (std::size_t i = 0; i < l.w.rows(); ++i)
            for (std::size_t j = 0; j < l.w.cols(); ++j) l.w(i, j) = r.get<double>();
        for (double& b : l.b) b = r.get<double>();
        l.w.validate_finite("'" + path + "' layer " + l.name);
    }
    return m;
}

void write_pgm(const std::string& path, const Matrix& pixels) {
    std::string out = "P5\n" + std::to_string(pixels.cols()) + " " +
                      std::to_string(pixels.rows()) + "\n255\n";
    for (std::size_t i = 0; i < pixels.rows(); ++i)
        for (std::size_t j = 0; j < pixels.cols(); ++j) {
            double v = std::clamp(pixels(i, j), 0.0, 1.0);
            out.push_back(static_cast<char>(std::lround(255.0 * v)));
        }
    write_text_file(path, out);
}

}  // namespace replab
