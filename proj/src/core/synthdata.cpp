#include "synthdata.hpp"

#include <cmath>
#include <cstdio>

#include "rng.hpp"

namespace replab {

std::string to_string(ShapeId s) {
    switch (s) {
        case ShapeId::square: return "square";
        case ShapeId::cross: return "cross";
        case ShapeId::disc: return "disc";
    }
    return "?";
}

ShapeId shape_from_string(const std::string& s) {
    if (s == "square") return ShapeId::square;
    if (s == "cross") return ShapeId::cross;
    if (s == "disc") return ShapeId::disc;
    throw InvalidInputError("unknown shape '" + s + "'");
}

DomainId domain_from_string(const std::string& s) {
    if (s == "source") return DomainId::source;
    if (s == "target") return DomainId::target;
    if (s == "two-factor" || s == "two_factor") return DomainId::two_factor;
    throw InvalidInputError("unknown domain '" + s + "' (expected source, target or two-factor)");
}

std::string to_string(DomainId d) {
    switch (d) {
        case DomainId::source: return "source";
        case DomainId::target: return "target";
        case DomainId::two_factor: return "two-factor";
    }
    return "?";
}

std::vector<double> render_sprite(const FactorSpec& f, std::size_t width) {
    const int w = static_cast<int>(width);
    if (f.size < 2 || f.size > w / 2) throw InvalidInputError("render_sprite: size out of range");
    if (f.pos_x < 0 || f.pos_y < 0 || f.pos_x + f.size > w || f.pos_y + f.size > w)
        throw InvalidInputError("render_sprite: sprite does not fit the canvas");
    if (!(f.intensity > 0.0) || f.intensity > 1.0)
        throw InvalidInputError("render_sprite: intensity outside (0,1]");

    std::vector<double> img(width * width, 0.0);
    auto put = [&](int x, int y) { img[static_cast<std::size_t>(y) * width + x] = f.intensity; };

    switch (f.shape_id) {
        case ShapeId::square:
            for (int y = f.pos_y; y < f.pos_y + f.size; ++y)
                for (int x = f.pos_x; x < f.pos_x + f.size; ++x) put(x, y);
            break;
        case ShapeId::cross: {
            // Plus sign inside the size x size box; bar thickness ~ size/3.
            int t = std::max(1, (f.size + 1) / 3);
            int off = (f.size - t) / 2;
            for (int y = f.pos_y; y < f.pos_y + f.size; ++y)
                for (int x = f.pos_x + off; x < f.pos_x + off + t; ++x) put(x, y);
            for (int y = f.pos_y + off; y < f.pos_y + off + t; ++y)
                for (int x = f.pos_x; x < f.pos_x + f.size; ++x) put(x, y);
            break;
        }
        case ShapeId::disc: {
            // Filled circle inscribed in the size x size box.
            double cx = f.pos_x + (f.size - 1) / 2.0;
            double cy = f.pos_y + (f.size - 1) / 2.0;
            double r = f.size / 2.0;
            for (int y = f.pos_y; y < f.pos_y + f.size; ++y)
                for (int x = f.pos_x; x < f.pos_x + f.size; ++x) {
                    double dx = x - cx, dy = y - cy;
                    if (dx * dx + dy * dy <= r * r) put(x, y);
                }
            break;
        }
    }
    return img;
}

ImageDataset make_domain(DomainId domain, std::size_t n, std::uint64_t seed, std::size_t width) {
    if (n < 1) throw InvalidInputError("make_domain: need at least 1 example");
    const int w = static_cast<int>(width);

    ImageDataset ds;
    ds.width = width;
    ds.images = Matrix(n, width * width);
    ds.labels.reserve(n);

    Rng rng = Rng::derive(seed, 0x646f6d61696eULL);
    for (std::size_t i = 0; i < n; ++i) {
        FactorSpec f;
        if (domain == DomainId::two_factor) {
            f.shape_id = ShapeId::square;
            f.size = 4;
            f.intensity = 1.0;
            f.pos_x = static_cast<int>(rng.next_below(w - f.size + 1));
            f.pos_y = static_cast<int>(rng.next_below(w - f.size + 1));
        } else {
            // Fixed draw order keeps streams aligned between domains, so the
            // pos/size/intensity marginals match exactly.
            bool first = rng.next_below(2) == 0;
            f.shape_id = domain == DomainId::source ? (first ? ShapeId::square : ShapeId::cross)
                                                    : (first ? ShapeId::disc : ShapeId::cross);
            f.size = 2 + static_cast<int>(rng.next_below(w / 2 - 1));
            f.pos_x = static_cast<int>(rng.next_below(w - f.size + 1));
            f.pos_y = static_cast<int>(rng.next_below(w - f.size + 1));
            f.intensity = 1.0 - rng.next_double();  // (0,1]
        }
        std::vector<double> img = render_sprite(f, width);
        double* row = ds.images.row(i);
        for (std::size_t p = 0; p < img.size(); ++p) row[p] = img[p];
        ds.labels.push_back(f);
    }
    return ds;
}

std::string labels_to_csv(const ImageDataset& ds) {
    std::string out = "index,shape,pos_x,pos_y,size,intensity\n";
    char buf[128];
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        const FactorSpec& f = ds.labels[i];
        std::snprintf(buf, sizeof(buf), "%zu,%s,%d,%d,%d,%.17g\n", i,
                      to_string(f.shape_id).c_str(), f.pos_x, f.pos_y, f.size, f.intensity);
        out += buf;
    }
    return out;
}

}  // namespace replab
