#pragma once

#include <string>

#include "hstl/nn/params.hpp"

namespace hstl::nn {

// HSCKPT1 container: magic "HSCKPT1", u32 LE JSON header
// {spec, tensors:[{name, shape, dtype, offset}, ...]}, then the raw
// little-endian tensor payloads in directory order. Offsets are relative
// to the payload start.
template <typename T>
void save_checkpoint(const ModelSpec& model, const Params<T>& params, const std::string& path);

// Reads a checkpoint saved with the same precision. Shape or dtype
// mismatches raise FormatError.
template <typename T>
std::pair<ModelSpec, Params<T>> load_checkpoint(const std::string& path);

// Peeks the stored dtype ("f32" or "f64") without loading payloads.
std::string checkpoint_dtype(const std::string& path);

}  // namespace hstl::nn
