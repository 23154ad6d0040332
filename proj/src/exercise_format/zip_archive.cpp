#include "gradeloop/exercise_format/zip_archive.hpp"

#include <zlib.h>

#include <algorithm>
#include <limits>

namespace gradeloop::zip {
namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralSig = 0x06054b50;
constexpr std::uint32_t kDataDescriptorSig = 0x08074b50;
constexpr std::size_t kLocalHeaderSize = 30;
constexpr std::size_t kCentralHeaderSize = 46;
constexpr std::size_t kEndOfCentralSize = 22;
constexpr std::uint16_t kFlagEncrypted = 0x0001;
constexpr std::uint16_t kFlagDataDescriptor = 0x0008;
constexpr std::uint16_t kFlagUtf8 = 0x0800;
constexpr std::uint16_t kMethodStored = 0;
constexpr std::uint16_t kMethodDeflate = 8;

class Cursor {
public:
    Cursor(ByteView data, std::size_t pos) : data_(data), pos_(pos) {}

    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<std::uint32_t>(data_[pos_]) |
                          (static_cast<std::uint32_t>(data_[pos_ + 1]) << 8) |
                          (static_cast<std::uint32_t>(data_[pos_ + 2]) << 16) |
                          (static_cast<std::uint32_t>(data_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ > data_.size() || data_.size() - pos_ < n) throw ZipError("truncated archive");
    }
    ByteView data_;
    std::size_t pos_;
};

void put16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}
void put_str(Bytes& out, std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

std::uint32_t checked_u32(std::size_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max() - 1) throw ZipError("archive too large");
    return static_cast<std::uint32_t>(v);
}

std::uint32_t crc_of(std::string_view data) {
    uLong crc = crc32(0L, Z_NULL, 0);
    return static_cast<std::uint32_t>(
        crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

std::string deflate_raw(std::string_view data) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw ZipError("deflateInit2 failed");
    std::string out(deflateBound(&zs, static_cast<uLong>(data.size())), '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    const std::size_t produced = zs.total_out;
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw ZipError("deflate failed");
    out.resize(produced);
    return out;
}

std::string inflate_raw(ByteView data, std::size_t expected, std::size_t max_size) {
    if (expected > max_size) throw ZipError("member exceeds size limit");
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw ZipError("inflateInit2 failed");
    std::string out(expected, '\0');
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const std::size_t produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected) throw ZipError("corrupt deflate stream");
    return out;
}

std::size_t find_end_of_central(ByteView data) {
    if (data.size() < kEndOfCentralSize) throw ZipError("not a zip archive");
    const std::size_t lowest =
        data.size() > kEndOfCentralSize + 0xffff ? data.size() - kEndOfCentralSize - 0xffff : 0;
    for (std::size_t pos = data.size() - kEndOfCentralSize + 1; pos-- > lowest;) {
        if (data[pos] == 0x50 && data[pos + 1] == 0x4b && data[pos + 2] == 0x05 && data[pos + 3] == 0x06)
            return pos;
    }
    throw ZipError("end of central directory not found");
}

}  // namespace

Reader::Reader(ByteView archive) : archive_(archive) {
    const std::size_t eocd = find_end_of_central(archive_);
    Cursor end(archive_, eocd + 4);
    const std::uint16_t disk = end.u16();
    const std::uint16_t cd_disk = end.u16();
    end.u16();
    const std::uint16_t total = end.u16();
    const std::uint32_t cd_size = end.u32();
    const std::uint32_t cd_offset = end.u32();
    if (disk != 0 || cd_disk != 0) throw ZipError("multi-disk archives are not supported");
    if (total == 0xffff || cd_offset == 0xffffffff) throw ZipError("zip64 archives are not supported");
    if (static_cast<std::size_t>(cd_offset) + cd_size > eocd) throw ZipError("central directory out of bounds");

    Cursor cd(archive_, cd_offset);
    entries_.reserve(total);
    for (std::uint16_t i = 0; i < total; ++i) {
        if (cd.u32() != kCentralHeaderSig) throw ZipError("bad central directory signature");
        Entry e;
        e.version_made_by = cd.u16();
        e.version_needed = cd.u16();
        e.flags = cd.u16();
        e.method = cd.u16();
        e.mod_time = cd.u16();
        e.mod_date = cd.u16();
        e.crc32 = cd.u32();
        e.compressed_size = cd.u32();
        e.uncompressed_size = cd.u32();
        const std::uint16_t name_len = cd.u16();
        const std::uint16_t extra_len = cd.u16();
        const std::uint16_t comment_len = cd.u16();
        cd.u16();  // disk number start
        e.internal_attributes = cd.u16();
        e.external_attributes = cd.u32();
        const std::uint32_t local_offset = cd.u32();
        e.name = cd.str(name_len);
        e.extra = cd.str(extra_len);
        e.comment = cd.str(comment_len);
        if (e.compressed_size == 0xffffffff || e.uncompressed_size == 0xffffffff || local_offset == 0xffffffff)
            throw ZipError("zip64 members are not supported");

        Cursor local(archive_, local_offset);
        if (local.u32() != kLocalHeaderSig) throw ZipError("bad local header signature");
        local.skip(22);
        const std::uint16_t local_name_len = local.u16();
        const std::uint16_t local_extra_len = local.u16();
        local.skip(local_name_len);
        local.skip(local_extra_len);
        e.record_offset = local_offset;
        e.data_offset = local.pos();
        local.skip(e.compressed_size);
        if (e.flags & kFlagDataDescriptor) {
            Cursor probe(archive_, local.pos());
            const std::size_t descriptor = probe.u32() == kDataDescriptorSig ? 16 : 12;
            local.skip(descriptor);
        }
        e.record_size = local.pos() - local_offset;
        entries_.push_back(std::move(e));
    }
}

const Entry* Reader::find(std::string_view name) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
    return it == entries_.end() ? nullptr : &*it;
}

std::string Reader::read(const Entry& entry, std::size_t max_size) const {
    if (entry.flags & kFlagEncrypted) throw ZipError("encrypted member: " + entry.name);
    ByteView payload = archive_.subspan(entry.data_offset, entry.compressed_size);
    std::string data;
    switch (entry.method) {
        case kMethodStored:
            if (entry.compressed_size > max_size) throw ZipError("member exceeds size limit");
            data = to_string(payload);
            break;
        case kMethodDeflate:
            data = inflate_raw(payload, entry.uncompressed_size, max_size);
            break;
        default:
            throw ZipError("unsupported compression method for " + entry.name);
    }
    if (crc_of(data) != entry.crc32) throw ZipError("crc mismatch in " + entry.name);
    return data;
}

void Writer::add(Entry e, std::string_view payload) {
    e.record_offset = out_.size();
    put32(out_, kLocalHeaderSig);
    put16(out_, e.version_needed);
    put16(out_, e.flags);
    put16(out_, e.method);
    put16(out_, e.mod_time);
    put16(out_, e.mod_date);
    put32(out_, e.crc32);
    put32(out_, e.compressed_size);
    put32(out_, e.uncompressed_size);
    put16(out_, static_cast<std::uint16_t>(e.name.size()));
    put16(out_, 0);
    put_str(out_, e.name);
    put_str(out_, payload);
    e.extra.clear();
    central_.push_back(std::move(e));
}

void Writer::add_stored(std::string_view name, std::string_view data, std::uint16_t mod_time,
                        std::uint16_t mod_date) {
    Entry e;
    e.name = std::string(name);
    e.method = kMethodStored;
    e.version_needed = 10;
    e.mod_time = mod_time;
    e.mod_date = mod_date;
    e.crc32 = crc_of(data);
    e.compressed_size = e.uncompressed_size = checked_u32(data.size());
    add(std::move(e), data);
}

void Writer::add_deflated(std::string_view name, std::string_view data, std::uint16_t mod_time,
                          std::uint16_t mod_date) {
    Entry e;
    e.name = std::string(name);
    e.method = kMethodDeflate;
    e.mod_time = mod_time;
    e.mod_date = mod_date;
    const std::string packed = deflate_raw(data);
    e.crc32 = crc_of(data);
    e.uncompressed_size = checked_u32(data.size());
    e.compressed_size = checked_u32(packed.size());
    add(std::move(e), packed);
}

void Writer::replace(const Entry& original, std::string_view data) {
    Entry e = original;
    e.flags = original.flags & kFlagUtf8;
    e.method = kMethodDeflate;
    e.version_needed = 20;
    const std::string packed = deflate_raw(data);
    e.crc32 = crc_of(data);
    e.uncompressed_size = checked_u32(data.size());
    e.compressed_size = checked_u32(packed.size());
    add(std::move(e), packed);
}

void Writer::copy_raw(const Reader& source, const Entry& entry) {
    Entry e = entry;
    e.record_offset = out_.size();
    ByteView record = source.raw_record(entry);
    out_.insert(out_.end(), record.begin(), record.end());
    central_.push_back(std::move(e));
}

Bytes Writer::finish() && {
    const std::size_t cd_offset = out_.size();
    for (const Entry& e : central_) {
        put32(out_, kCentralHeaderSig);
        put16(out_, e.version_made_by);
        put16(out_, e.version_needed);
        put16(out_, e.flags);
        put16(out_, e.method);
        put16(out_, e.mod_time);
        put16(out_, e.mod_date);
        put32(out_, e.crc32);
        put32(out_, e.compressed_size);
        put32(out_, e.uncompressed_size);
        put16(out_, static_cast<std::uint16_t>(e.name.size()));
        put16(out_, static_cast<std::uint16_t>(e.extra.size()));
        put16(out_, static_cast<std::uint16_t>(e.comment.size()));
        put16(out_, 0);
        put16(out_, e.internal_attributes);
        put32(out_, e.external_attributes);
        put32(out_, checked_u32(e.record_offset));
        put_str(out_, e.name);
        put_str(out_, e.extra);
        put_str(out_, e.comment);
    }
    const std::size_t cd_size = out_.size() - cd_offset;
    if (central_.size() >= 0xffff) throw ZipError("too many members");
    put32(out_, kEndOfCentralSig);
    put16(out_, 0);
    put16(out_, 0);
    put16(out_, static_cast<std::uint16_t>(central_.size()));
    put16(out_, static_cast<std::uint16_t>(central_.size()));
    put32(out_, checked_u32(cd_size));
    put32(out_, checked_u32(cd_offset));
    put16(out_, 0);
    return std::move(out_);
}

}  // namespace gradeloop::zip
