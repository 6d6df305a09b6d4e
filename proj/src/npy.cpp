#include "enscore/npy.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <regex>

namespace enscore {

std::string to_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace enscore

namespace enscore::npy {

static_assert(std::endian::native == std::endian::little,
              "NPY payloads are copied verbatim; big-endian hosts are unsupported");

namespace {

constexpr std::string_view kMagic = "\x93NUMPY";
constexpr std::size_t kPreamble = 10;  // magic(6) + version(2) + header_len(2)

std::string shape_tuple(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += std::to_string(shape[i]);
        if (shape.size() == 1 || i + 1 < shape.size()) s += ",";
        if (i + 1 < shape.size()) s += " ";
    }
    return s + ")";
}

std::string make_header(std::string_view descr, const Shape& shape) {
    std::string dict = "{'descr': '" + std::string(descr) +
                       "', 'fortran_order': False, 'shape': " + shape_tuple(shape) + ", }";
    // Pad with spaces so that preamble + dict + '\n' is a multiple of 64.
    const std::size_t unpadded = kPreamble + dict.size() + 1;
    dict.append((64 - unpadded % 64) % 64, ' ');
    dict.push_back('\n');

    std::string out(kMagic);
    out.push_back('\x01');
    out.push_back('\x00');
    const auto len = static_cast<std::uint16_t>(dict.size());
    out.push_back(static_cast<char>(len & 0xff));
    out.push_back(static_cast<char>(len >> 8));
    return out + dict;
}

template <typename T>
std::string encode_impl(std::string_view descr, ConstView<T> view) {
    std::string out = make_header(descr, view.shape());
    const auto bytes = std::as_bytes(view.data());
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    return out;
}

}  // namespace

std::string encode(ConstView<float> view) { return encode_impl<float>("<f4", view); }
std::string encode(ConstView<std::uint8_t> view) { return encode_impl<std::uint8_t>("|u1", view); }

Array decode(std::string_view bytes, std::string_view name) {
    const std::string label(name);
    if (bytes.size() < kPreamble || bytes.substr(0, kMagic.size()) != kMagic)
        throw FormatError(label + ": NPY magic string not found");
    if (bytes[6] != '\x01' || bytes[7] != '\x00')
        throw FormatError(label + ": only NPY format version 1.0 is supported");

    const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                   (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
    if (bytes.size() < kPreamble + header_len)
        throw FormatError(label + ": truncated NPY header");
    const std::string dict(bytes.substr(kPreamble, header_len));

    std::smatch m;
    static const std::regex descr_re(R"('descr':\s*'([<>|=])([a-z])(\d+)')");
    static const std::regex order_re(R"('fortran_order':\s*(True|False))");
    static const std::regex shape_re(R"('shape':\s*\(([^)]*)\))");

    if (!std::regex_search(dict, m, descr_re)) throw FormatError(label + ": missing 'descr'");
    const std::string descr = m[1].str() + m[2].str() + m[3].str();
    Array out;
    if (descr == "<f4")
        out.dtype = Dtype::float32;
    else if (descr == "|u1" || descr == "<u1" || descr == "=u1")
        out.dtype = Dtype::uint8;
    else
        throw FormatError(label + ": unsupported dtype '" + descr + "'");

    if (!std::regex_search(dict, m, order_re)) throw FormatError(label + ": missing 'fortran_order'");
    if (m[1] == "True") throw FormatError(label + ": Fortran-ordered arrays are not supported");

    if (!std::regex_search(dict, m, shape_re)) throw FormatError(label + ": missing 'shape'");
    static const std::regex dim_re(R"(\d+)");
    const std::string dims = m[1].str();
    for (auto it = std::sregex_iterator(dims.begin(), dims.end(), dim_re); it != std::sregex_iterator(); ++it) {
        std::size_t d = 0;
        const std::string tok = it->str();
        std::from_chars(tok.data(), tok.data() + tok.size(), d);
        out.shape.push_back(d);
    }

    const std::size_t word = out.dtype == Dtype::float32 ? 4 : 1;
    const std::size_t expected = element_count(out.shape) * word;
    const std::string_view payload = bytes.substr(kPreamble + header_len);
    if (payload.size() != expected)
        throw FormatError(label + ": payload holds " + std::to_string(payload.size()) +
                          " bytes, shape " + to_string(out.shape) + " needs " + std::to_string(expected));
    out.payload = std::string(payload);
    return out;
}

FloatTensor to_float_tensor(const Array& array, std::string_view name) {
    if (array.dtype != Dtype::float32)
        throw FormatError(std::string(name) + ": expected float32 array");
    std::vector<float> data(element_count(array.shape));
    std::memcpy(data.data(), array.payload.data(), array.payload.size());
    return FloatTensor(array.shape, std::move(data));
}

MaskTensor to_mask_tensor(const Array& array, std::string_view name) {
    if (array.dtype != Dtype::uint8)
        throw FormatError(std::string(name) + ": expected uint8 array");
    std::vector<std::uint8_t> data(array.payload.begin(), array.payload.end());
    return MaskTensor(array.shape, std::move(data));
}

}  // namespace enscore::npy
