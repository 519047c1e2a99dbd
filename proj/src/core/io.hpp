#ifndef REPLAB_CORE_IO_HPP
#define REPLAB_CORE_IO_HPP

#include <cstdint>
#include <string>

#include "matrix.hpp"
#include "vae.hpp"

namespace replab {

/// Activation matrix with its identity tags, the payload of a .act file.
/// Layout: "ACTV" magic, u16 version, length-prefixed layer name and model id,
/// u32 epoch, u32 rows, u32 cols, then row-major little-endian f64 payload.
struct ActFile {
    Matrix data;
    std::string layer_name;
    std::string model_id;
    std::uint32_t epoch = 0;
};

void write_act(const std::string& path, const Matrix& m, const std::string& layer_name,
               const std::string& model_id, std::uint32_t epoch);
ActFile read_act(const std::string& path);

/// One .act per captured layer: <prefix>_<layer>.act.
void save_capture(const ActivationCapture& cap, const std::string& prefix);

/// CSV fallback import/export: header row is the column index, values at 17
/// significant digits.
void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(const std::string& path);

/// Model checkpoint (.vaec): "VAEC" magic, architecture and objective
/// descriptors, step count, then parameters as little-endian f64 in layer
/// order (weights row-major, then biases).
void write_vaec(const std::string& path, const VaeModel& m);
VaeModel read_vaec(const std::string& path);

/// 8-bit binary PGM from pixel values in [0,1].
void write_pgm(const std::string& path, const Matrix& pixels);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace replab

#endif
