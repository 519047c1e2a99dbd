#ifndef REPLAB_CORE_SYNTHDATA_HPP
#define REPLAB_CORE_SYNTHDATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace replab {

enum class ShapeId : std::uint8_t { square = 0, cross = 1, disc = 2 };

std::string to_string(ShapeId s);
ShapeId shape_from_string(const std::string& s);

/// Ground-truth factors of one sprite. The rendered sprite always fits the
/// canvas: pos in [0, W-size], size in [2, W/2].
struct FactorSpec {
    ShapeId shape_id = ShapeId::square;
    int pos_x = 0;
    int pos_y = 0;
    int size = 2;
    double intensity = 1.0;  // in (0,1]
};

enum class DomainId { source, target, two_factor };

DomainId domain_from_string(const std::string& s);
std::string to_string(DomainId d);

struct ImageDataset {
    std::size_t width = 12;
    Matrix images;  // n x width*width, pixel values in [0,1]
    std::vector<FactorSpec> labels;

    std::size_t count() const { return labels.size(); }
};

/// Rasterizes one sprite onto a blank width x width canvas; pure function of
/// the factors.
std::vector<double> render_sprite(const FactorSpec& f, std::size_t width);

/// Source draws shapes {square, cross}; target draws {disc, cross}; both share
/// the pos/size/intensity marginals. two_factor varies only position (fixed
/// square, size 4, intensity 1) and backs the polarised-regime checks.
ImageDataset make_domain(DomainId domain, std::size_t n, std::uint64_t seed,
                         std::size_t width = 12);

/// labels CSV: index,shape,pos_x,pos_y,size,intensity.
std::string labels_to_csv(const ImageDataset& ds);

}  // namespace replab

#endif
