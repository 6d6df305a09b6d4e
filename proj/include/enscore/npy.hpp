#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "enscore/tensor.hpp"

namespace enscore::npy {

// Element types the container uses: '<f4' for values, '|u1' for masks.
enum class Dtype { float32, uint8 };

struct Array {
    Dtype dtype{Dtype::float32};
    Shape shape;
    std::string payload;  // raw little-endian C-order bytes
};

// NPY v1.0 encoding of a C-order array. Header padded to a multiple of 64 bytes.
std::string encode(ConstView<float> view);
std::string encode(ConstView<std::uint8_t> view);

// Parses an NPY v1.0 buffer. Rejects big-endian, Fortran order, and dtypes
// other than float32/uint8. `name` only decorates error messages.
Array decode(std::string_view bytes, std::string_view name = "array");

FloatTensor to_float_tensor(const Array& array, std::string_view name = "array");
MaskTensor to_mask_tensor(const Array& array, std::string_view name = "array");

}  // namespace enscore::npy
