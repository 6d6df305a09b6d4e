#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace enscore::zip {

// Builds a deflate-compressed ZIP archive in memory. Entry order follows the
// order of `add` calls; timestamps are pinned so identical input yields
// identical bytes.
class Writer {
public:
    void add(std::string name, std::string_view contents);

    // Serializes the archive (local headers, data, central directory, EOCD).
    std::string finish() const;

    // Writes `finish()` to `path` via a sibling temp file and rename.
    void write_to(const std::filesystem::path& path) const;

private:
    struct Entry {
        std::string name;
        std::string compressed;
        std::uint32_t crc{0};
        std::uint32_t raw_size{0};
    };
    std::vector<Entry> entries_;
};

// Reads every entry of a ZIP archive (stored or deflate). No ZIP64.
std::map<std::string, std::string> read_all(std::string_view archive);
std::map<std::string, std::string> read_file(const std::filesystem::path& path);

}  // namespace enscore::zip
