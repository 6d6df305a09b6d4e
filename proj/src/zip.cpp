#include "enscore/zip.hpp"

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>

#include "enscore/errors.hpp"

namespace enscore::zip {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kVersion = 20;
constexpr std::uint16_t kDeflate = 8;
constexpr std::uint16_t kStored = 0;
constexpr std::uint16_t kUtf8Flag = 1u << 11;
// 1980-01-01 00:00:00 in MS-DOS format.
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;

void put16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get16(std::string_view s, std::size_t at) {
    if (at + 2 > s.size()) throw FormatError("zip: truncated record");
    return static_cast<std::uint16_t>(static_cast<unsigned char>(s[at]) |
                                      (static_cast<unsigned char>(s[at + 1]) << 8));
}

std::uint32_t get32(std::string_view s, std::size_t at) {
    if (at + 4 > s.size()) throw FormatError("zip: truncated record");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + i]);
    return v;
}

std::string raw_deflate(std::string_view input) {
    z_stream zs{};
    // Negative window bits: raw deflate stream without zlib wrapper, as ZIP expects.
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw IoError("zip: deflateInit2 failed");
    std::string out(deflateBound(&zs, static_cast<uLong>(input.size())), '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(input.data()));
    zs.avail_in = static_cast<uInt>(input.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw IoError("zip: deflate failed");
    out.resize(zs.total_out);
    return out;
}

std::string raw_inflate(std::string_view input, std::size_t raw_size, const std::string& name) {
    std::string out(raw_size, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw FormatError("zip: inflateInit2 failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(input.data()));
    zs.avail_in = static_cast<uInt>(input.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != raw_size)
        throw FormatError("zip: corrupt deflate stream in entry " + name);
    return out;
}

std::uint32_t crc_of(std::string_view data) {
    return static_cast<std::uint32_t>(
        crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

}  // namespace

void Writer::add(std::string name, std::string_view contents) {
    if (contents.size() > std::numeric_limits<std::uint32_t>::max())
        throw IoError("zip: entry " + name + " exceeds 4 GiB (ZIP64 unsupported)");
    Entry e;
    e.name = std::move(name);
    e.crc = crc_of(contents);
    e.raw_size = static_cast<std::uint32_t>(contents.size());
    e.compressed = raw_deflate(contents);
    entries_.push_back(std::move(e));
}

std::string Writer::finish() const {
    std::string out;
    std::vector<std::uint32_t> offsets;
    for (const auto& e : entries_) {
        offsets.push_back(static_cast<std::uint32_t>(out.size()));
        put32(out, kLocalSig);
        put16(out, kVersion);
        put16(out, kUtf8Flag);
        put16(out, kDeflate);
        put16(out, kDosTime);
        put16(out, kDosDate);
        put32(out, e.crc);
        put32(out, static_cast<std::uint32_t>(e.compressed.size()));
        put32(out, e.raw_size);
        put16(out, static_cast<std::uint16_t>(e.name.size()));
        put16(out, 0);
        out += e.name;
        out += e.compressed;
    }
    const auto central_start = static_cast<std::uint32_t>(out.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        put32(out, kCentralSig);
        put16(out, kVersion);  // made by
        put16(out, kVersion);  // needed
        put16(out, kUtf8Flag);
        put16(out, kDeflate);
        put16(out, kDosTime);
        put16(out, kDosDate);
        put32(out, e.crc);
        put32(out, static_cast<std::uint32_t>(e.compressed.size()));
        put32(out, e.raw_size);
        put16(out, static_cast<std::uint16_t>(e.name.size()));
        put16(out, 0);  // extra
        put16(out, 0);  // comment
        put16(out, 0);  // disk
        put16(out, 0);  // internal attrs
        put32(out, 0);  // external attrs
        put32(out, offsets[i]);
        out += e.name;
    }
    const auto central_size = static_cast<std::uint32_t>(out.size()) - central_start;
    put32(out, kEndSig);
    put16(out, 0);
    put16(out, 0);
    put16(out, static_cast<std::uint16_t>(entries_.size()));
    put16(out, static_cast<std::uint16_t>(entries_.size()));
    put32(out, central_size);
    put32(out, central_start);
    put16(out, 0);
    return out;
}

void Writer::write_to(const std::filesystem::path& path) const {
    const std::string bytes = finish();
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::map<std::string, std::string> read_all(std::string_view archive) {
    // The EOCD sits within the last 22 + 65535 bytes (max comment length).
    if (archive.size() < 22) throw FormatError("zip: archive too small");
    std::size_t eocd = std::string_view::npos;
    const std::size_t lowest = archive.size() > 22 + 0xffff ? archive.size() - 22 - 0xffff : 0;
    for (std::size_t at = archive.size() - 22 + 1; at-- > lowest;) {
        if (get32(archive, at) == kEndSig) {
            eocd = at;
            break;
        }
    }
    if (eocd == std::string_view::npos) throw FormatError("zip: end of central directory not found");

    const std::uint16_t count = get16(archive, eocd + 10);
    std::size_t at = get32(archive, eocd + 16);

    std::map<std::string, std::string> entries;
    for (std::uint16_t i = 0; i < count; ++i) {
        if (get32(archive, at) != kCentralSig) throw FormatError("zip: bad central directory record");
        const std::uint16_t method = get16(archive, at + 10);
        const std::uint32_t crc = get32(archive, at + 16);
        const std::uint32_t comp_size = get32(archive, at + 20);
        const std::uint32_t raw_size = get32(archive, at + 24);
        const std::uint16_t name_len = get16(archive, at + 28);
        const std::uint16_t extra_len = get16(archive, at + 30);
        const std::uint16_t comment_len = get16(archive, at + 32);
        const std::uint32_t local = get32(archive, at + 42);
        if (at + 46 + name_len > archive.size()) throw FormatError("zip: truncated central directory");
        std::string name(archive.substr(at + 46, name_len));
        at += 46 + name_len + extra_len + comment_len;

        if (get32(archive, local) != kLocalSig) throw FormatError("zip: bad local header for " + name);
        const std::size_t data_at = local + 30 + get16(archive, local + 26) + get16(archive, local + 28);
        if (data_at + comp_size > archive.size()) throw FormatError("zip: truncated entry " + name);
        const std::string_view data = archive.substr(data_at, comp_size);

        std::string contents;
        if (method == kStored)
            contents = std::string(data);
        else if (method == kDeflate)
            contents = raw_inflate(data, raw_size, name);
        else
            throw FormatError("zip: unsupported compression method " + std::to_string(method) + " in " + name);
        if (crc_of(contents) != crc) throw FormatError("zip: CRC mismatch in entry " + name);
        entries.emplace(std::move(name), std::move(contents));
    }
    return entries;
}

std::map<std::string, std::string> read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return read_all(bytes);
}

}  // namespace enscore::zip
