#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spkn/pipeline.hpp"

namespace spkn {

inline constexpr std::uint16_t kModelFormatVersion = 1;

/// Little-endian container:
///
///   "SPKN" u16 version
///   then sections, each: 4-byte tag, u64 payload length, payload
///     CONF  u64 config digest
///     FILT  u8 mode, i32 steps, f64 cutoff, u32 F, f64 sigmas[F],
///           u8 has_zca [, u32 rank, u64 dims[rank], u32 D, u32 r, f64 eps,
///           f64 mean[D], f64 basis[r*D], f64 gains[r]]
///     LAY1  u32 out, in, kh, kw, stride, pad, pool; f64 threshold;
///     LAY2    then ceil(out*in*kh*kw/8) bytes of weight bits, LSB first
///     PCA_  u32 k, u32 D, f64 mean[D], f64 components[k*D], f64 variance[k]
///     SVM_  u32 classes, u32 dims, f64 lambda, i32 epochs, u64 seed,
///           f64 weights[classes*dims], f64 bias[classes],
///           u32 rff_dims, f64 rff_gamma, u64 rff_seed, f64 input_scale
///
/// The filter kernels are rebuilt from the sigmas on load.
std::vector<std::uint8_t> serialize_model(const SpikingModel& model);
SpikingModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const SpikingModel& model);
SpikingModel load_model(const std::filesystem::path& path);

inline constexpr std::size_t kLayerHeaderBytes = 7 * 4 + 8;

}  // namespace spkn
