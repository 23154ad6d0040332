#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gradeloop {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}
inline std::string to_string(ByteView bytes) {
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

}  // namespace gradeloop

namespace gradeloop::zip {

class ZipError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One member of a parsed archive. `record` points into the source buffer and
/// covers the local header, the stored payload and any data descriptor, so an
/// untouched member can be copied out verbatim.
struct Entry {
    std::string name;
    std::uint16_t version_needed = 20;
    std::uint16_t flags = 0;
    std::uint16_t method = 0;
    std::uint16_t mod_time = 0;
    std::uint16_t mod_date = 0;
    std::uint32_t crc32 = 0;
    std::uint32_t compressed_size = 0;
    std::uint32_t uncompressed_size = 0;
    std::uint16_t version_made_by = 20;
    std::uint16_t internal_attributes = 0;
    std::uint32_t external_attributes = 0;
    std::string extra;    // central directory extra field
    std::string comment;  // central directory comment

    std::size_t record_offset = 0;
    std::size_t record_size = 0;
    std::size_t data_offset = 0;
};

/// Read-only view over a ZIP archive held in memory. The buffer must outlive
/// the reader. ZIP64 and encrypted members are rejected.
class Reader {
public:
    explicit Reader(ByteView archive);

    const std::vector<Entry>& entries() const { return entries_; }
    const Entry* find(std::string_view name) const;

    /// Decompressed payload, CRC-checked. Throws ZipError when the member is
    /// larger than `max_size` once inflated.
    std::string read(const Entry& entry, std::size_t max_size = 256u << 20) const;

    ByteView raw_record(const Entry& entry) const {
        return archive_.subspan(entry.record_offset, entry.record_size);
    }

private:
    ByteView archive_;
    std::vector<Entry> entries_;
};

/// Builds an archive member by member. Members are written in call order.
class Writer {
public:
    /// Fixed DOS timestamp (1980-01-01 00:00) so generated archives are
    /// byte-reproducible.
    static constexpr std::uint16_t kEpochTime = 0;
    static constexpr std::uint16_t kEpochDate = (0 << 9) | (1 << 5) | 1;

    void add_stored(std::string_view name, std::string_view data,
                    std::uint16_t mod_time = kEpochTime, std::uint16_t mod_date = kEpochDate);
    void add_deflated(std::string_view name, std::string_view data,
                      std::uint16_t mod_time = kEpochTime, std::uint16_t mod_date = kEpochDate);

    /// Re-encodes `data` in place of `original`, keeping its name, timestamp,
    /// attributes and comment.
    void replace(const Entry& original, std::string_view data);

    /// Copies a member from another archive without recompressing it.
    void copy_raw(const Reader& source, const Entry& entry);

    Bytes finish() &&;

private:
    void add(Entry entry, std::string_view payload);

    Bytes out_;
    std::vector<Entry> central_;
};

}  // namespace gradeloop::zip
