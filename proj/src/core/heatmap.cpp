#include "heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace replab {

namespace {

void check_same_layers(const std::vector<const ActivationCapture*>& caps, const char* side) {
    for (std::size_t i = 1; i < caps.size(); ++i)
        if (caps[i]->layer_names != caps[0]->layer_names)
            throw InvalidInputError(std::string("average_heatmap: layer-name mismatch within ") +
                                    side + " capture list");
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInputError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInputError("write failed for '" + path + "'");
}

int to_gray(double v) { return static_cast<int>(std::lround(255.0 * v)); }

}  // namespace

SimilarityHeatmap average_heatmap(const std::vector<const ActivationCapture*>& captures_a,
                                  const std::vector<const ActivationCapture*>& captures_b,
                                  MetricKind metric) {
    if (captures_a.empty() || captures_b.empty())
        throw InvalidInputError("average_heatmap: empty capture list");
    check_same_layers(captures_a, "the first");
    check_same_layers(captures_b, "the second");

    SimilarityHeatmap h;
    h.row_layers = captures_a[0]->layer_names;
    h.col_layers = captures_b[0]->layer_names;
    h.metric_kind = metric;
    h.n_seed_pairs = captures_a.size() * captures_b.size();
    h.values = Matrix(h.row_layers.size(), h.col_layers.size());
    h.mask.assign(h.row_layers.size() * h.col_layers.size(), 0);

    for (std::size_t j = 0; j < h.row_layers.size(); ++j) {
        for (std::size_t k = 0; k < h.col_layers.size(); ++k) {
            double acc = 0.0;
            bool degenerate = false;
            for (const ActivationCapture* a : captures_a) {
                for (const ActivationCapture* b : captures_b) {
                    try {
                        acc += similarity(a->layers[j], b->layers[k], metric).value;
                    } catch (const DegenerateInputError&) {
                        degenerate = true;
                    }
                }
            }
            if (degenerate) {
                h.mask[j * h.col_layers.size() + k] = 1;
                h.values(j, k) = 0.0;
            } else {
                h.values(j, k) = acc / static_cast<double>(h.n_seed_pairs);
            }
        }
    }
    return h;
}

std::string render_csv(const SimilarityHeatmap& h) {
    std::string out = "layer";
    for (const std::string& c : h.col_layers) out += "," + c;
    out += "\n";
    char buf[48];
    for (std::size_t j = 0; j < h.row_layers.size(); ++j) {
        out += h.row_layers[j];
        for (std::size_t k = 0; k < h.col_layers.size(); ++k) {
            if (h.masked(j, k)) {
                out += ",nan";
            } else {
                std::snprintf(buf, sizeof(buf), ",%.6f", h.values(j, k));
                out += buf;
            }
        }
        out += "\n";
    }
    return out;
}

SimilarityHeatmap parse_heatmap_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw InvalidInputError("heatmap csv: empty input");
    SimilarityHeatmap h;
    {
        std::stringstream hs(line);
        std::string cell;
        bool first = true;
        while (std::getline(hs, cell, ',')) {
            if (first) first = false;
            else h.col_layers.push_back(cell);
        }
    }
    std::vector<std::vector<double>> rows;
    std::vector<std::vector<std::uint8_t>> masks;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        std::stringstream rs(line);
        std::string cell;
        std::getline(rs, cell, ',');
        h.row_layers.push_back(cell);
        std::vector<double> vals;
        std::vector<std::uint8_t> mask;
        while (std::getline(rs, cell, ',')) {
            if (cell == "nan") {
                vals.push_back(0.0);
                mask.push_back(1);
            } else {
                vals.push_back(std::stod(cell));
                mask.push_back(0);
            }
        }
        if (vals.size() != h.col_layers.size())
            throw InvalidInputError("heatmap csv: ragged row");
        rows.push_back(std::move(vals));
        masks.push_back(std::move(mask));
    }
    h.values = Matrix(h.row_layers.size(), h.col_layers.size());
    h.mask.assign(h.values.size(), 0);
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (std::size_t k = 0; k < h.col_layers.size(); ++k) {
            h.values(j, k) = rows[j][k];
            h.mask[j * h.col_layers.size() + k] = masks[j][k];
        }
    return h;
}

std::string render_pgm(const SimilarityHeatmap& h) {
    std::string out = "P5\n" + std::to_string(h.col_layers.size()) + " " +
                      std::to_string(h.row_layers.size()) + "\n255\n";
    for (std::size_t j = 0; j < h.row_layers.size(); ++j)
        for (std::size_t k = 0; k < h.col_layers.size(); ++k)
            out.push_back(static_cast<char>(h.masked(j, k) ? 0 : to_gray(h.values(j, k))));
    return out;
}

std::string render_pgm_mask(const SimilarityHeatmap& h) {
    std::string out = "P5\n" + std::to_string(h.col_layers.size()) + " " +
                      std::to_string(h.row_layers.size()) + "\n255\n";
    for (std::size_t j = 0; j < h.row_layers.size(); ++j)
        for (std::size_t k = 0; k < h.col_layers.size(); ++k)
            out.push_back(static_cast<char>(h.masked(j, k) ? 255 : 0));
    return out;
}

std::string render_svg(const SimilarityHeatmap& h) {
    const int cell = 24, label = 84, ramp_h = 16, pad = 8;
    const int grid_w = cell * static_cast<int>(h.col_layers.size());
    const int grid_h = cell * static_cast<int>(h.row_layers.size());
    const int width = label + grid_w + pad;
    const int height = label + grid_h + pad + ramp_h + 24;

    std::string svg;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\">\n",
                  width, height);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n", width, height);
    svg += buf;

    for (std::size_t j = 0; j < h.row_layers.size(); ++j) {
        for (std::size_t k = 0; k < h.col_layers.size(); ++k) {
            int x = label + static_cast<int>(k) * cell;
            int y = label + static_cast<int>(j) * cell;
            if (h.masked(j, k)) {
                std::snprintf(buf, sizeof(buf),
                              "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"white\" "
                              "stroke=\"gray\"/><line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
                              "stroke=\"gray\"/>\n",
                              x, y, cell, cell, x, y, x + cell, y + cell);
            } else {
                int g = to_gray(h.values(j, k));
                std::snprintf(buf, sizeof(buf),
                              "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                              "fill=\"rgb(%d,%d,%d)\"/>\n",
                              x, y, cell, cell, g, g, g);
            }
            svg += buf;
        }
    }
    for (std::size_t j = 0; j < h.row_layers.size(); ++j) {
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%d\" font-size=\"10\" text-anchor=\"end\" "
                      "font-family=\"monospace\">%s</text>\n",
                      label - 4, label + static_cast<int>(j) * cell + cell / 2 + 3,
                      h.row_layers[j].c_str());
        svg += buf;
    }
    for (std::size_t k = 0; k < h.col_layers.size(); ++k) {
        int x = label + static_cast<int>(k) * cell + cell / 2;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%d\" font-size=\"10\" text-anchor=\"start\" "
                      "font-family=\"monospace\" transform=\"rotate(-60 %d %d)\">%s</text>\n",
                      x, label - 6, x, label - 6, h.col_layers[k].c_str());
        svg += buf;
    }
    // 0 -> 1 grayscale ramp
    int ramp_y = label + grid_h + pad;
    for (int i = 0; i < 64; ++i) {
        int g = to_gray(static_cast<double>(i) / 63.0);
        std::snprintf(buf, sizeof(buf),
                      "<rect x=\"%d\" y=\"%d\" width=\"3\" height=\"%d\" fill=\"rgb(%d,%d,%d)\"/>\n",
                      label + i * 3, ramp_y, ramp_h, g, g, g);
        svg += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-size=\"10\" font-family=\"monospace\">0</text>\n"
                  "<text x=\"%d\" y=\"%d\" font-size=\"10\" font-family=\"monospace\">1</text>\n",
                  label, ramp_y + ramp_h + 12, label + 64 * 3 - 6, ramp_y + ramp_h + 12);
    svg += buf;
    svg += "</svg>\n";
    return svg;
}

void render_to_files(const SimilarityHeatmap& h, const std::string& base_path) {
    write_file(base_path + ".csv", render_csv(h));
    write_file(base_path + ".pgm", render_pgm(h));
    write_file(base_path + ".svg", render_svg(h));
    bool any_masked = false;
    for (std::uint8_t m : h.mask) any_masked |= m != 0;
    if (any_masked) write_file(base_path + ".mask.pgm", render_pgm_mask(h));
}

double block_mean(const SimilarityHeatmap& h, const std::vector<std::string>& rows,
                  const std::vector<std::string>& cols) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < h.row_layers.size(); ++j) {
        if (std::find(rows.begin(), rows.end(), h.row_layers[j]) == rows.end()) continue;
        for (std::size_t k = 0; k < h.col_layers.size(); ++k) {
            if (std::find(cols.begin(), cols.end(), h.col_layers[k]) == cols.end()) continue;
            if (h.masked(j, k)) continue;
            acc += h.values(j, k);
            ++count;
        }
    }
    if (count == 0) throw InvalidInputError("block_mean: no unmasked cells in block");
    return acc / static_cast<double>(count);
}

std::vector<std::string> encoder_block_layers(const std::vector<std::string>& layers) {
    std::vector<std::string> out;
    for (const std::string& l : layers)
        if (l == "input" || l.rfind("enc_", 0) == 0) out.push_back(l);
    return out;
}

std::vector<std::string> decoder_block_layers(const std::vector<std::string>& layers) {
    std::vector<std::string> out;
    for (const std::string& l : layers)
        if (l == "output" || l.rfind("dec_", 0) == 0) out.push_back(l);
    return out;
}

double encoder_block_mean(const SimilarityHeatmap& h) {
    return block_mean(h, encoder_block_layers(h.row_layers), encoder_block_layers(h.col_layers));
}

double decoder_block_mean(const SimilarityHeatmap& h) {
    return block_mean(h, decoder_block_layers(h.row_layers), decoder_block_layers(h.col_layers));
}

}  // namespace replab
