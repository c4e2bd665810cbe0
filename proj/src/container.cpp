// SPDX-License-Identifier: Apache-2.0
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <string>

#include "bytes.hpp"
#include "elmgs/codec.hpp"
#include "elmgs/error.hpp"

namespace elmgs {

namespace {

// magic, version, flags, count, AABB
constexpr std::size_t kHeaderBytes = 4 + 2 + 2 + 8 + 6 * 8;
// id, bits, signed, reserved, step, raw_len, comp_len
constexpr std::size_t kRecordBytes = 4 + 8 + 8 + 8;
constexpr std::uint16_t kFlagMorton = 1;
constexpr std::size_t kTrailerBytes = 4;

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorKind::Corruption, "corrupt container: " + what); }

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        const T v = detail::get_le<T>(bytes_.data() + pos_);
        pos_ += sizeof(T);
        return v;
    }

    std::span<const std::uint8_t> take(std::uint64_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, static_cast<std::size_t>(n));
        pos_ += static_cast<std::size_t>(n);
        return s;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::uint64_t n) const {
        if (n > remaining())
            corrupt("truncated at byte " + std::to_string(pos_) + " (needs " + std::to_string(n) +
                    " more bytes, " + std::to_string(remaining()) + " left)");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

struct Header {
    std::uint16_t flags = 0;
    std::uint64_t count = 0;
    Aabb aabb;
};

Header read_header(Reader& r) {
    const auto magic = r.take(4);
    if (!std::equal(magic.begin(), magic.end(), kContainerMagic.begin()))
        fail(ErrorKind::Format, "not an ELMG container (bad magic)");
    const auto version = r.get<std::uint16_t>();
    if (version != kContainerVersion)
        fail(ErrorKind::Format, "unsupported container version " + std::to_string(version));
    Header h;
    h.flags = r.get<std::uint16_t>();
    if (h.flags & ~kFlagMorton) corrupt("unknown flag bits");
    h.count = r.get<std::uint64_t>();
    for (int a = 0; a < 3; ++a) h.aabb.min[a] = r.get<double>();
    for (int a = 0; a < 3; ++a) h.aabb.max[a] = r.get<double>();
    return h;
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t done = 0;
    while (done < bytes.size()) {
        const std::size_t n = std::min<std::size_t>(bytes.size() - done, std::numeric_limits<uInt>::max());
        crc = crc32(crc, bytes.data() + done, static_cast<uInt>(n));
        done += n;
    }
    return static_cast<std::uint32_t>(crc);
}

// Checks magic and version, then the CRC-32 trailer; returns the bytes it covers.
std::span<const std::uint8_t> checked_body(std::span<const std::uint8_t> bytes) {
    Reader probe(bytes);
    const auto magic = probe.take(4);
    if (!std::equal(magic.begin(), magic.end(), kContainerMagic.begin()))
        fail(ErrorKind::Format, "not an ELMG container (bad magic)");
    const auto version = probe.get<std::uint16_t>();
    if (version != kContainerVersion)
        fail(ErrorKind::Format, "unsupported container version " + std::to_string(version));
    if (bytes.size() < kHeaderBytes + kTrailerBytes)
        corrupt("truncated: " + std::to_string(bytes.size()) + " bytes is shorter than the header");
    const auto body = bytes.first(bytes.size() - kTrailerBytes);
    const auto stored = detail::get_le<std::uint32_t>(bytes.data() + body.size());
    if (stored != crc_of(body)) corrupt("checksum mismatch (truncated or damaged)");
    return body;
}

struct Record {
    QuantizerState qs;
    std::uint64_t raw_len = 0;
    std::uint64_t comp_len = 0;
};

Record read_record(Reader& r, Attribute expected) {
    Record rec;
    const auto id = r.get<std::uint8_t>();
    if (id != static_cast<std::uint8_t>(expected)) corrupt("attribute record " + std::to_string(id) + " out of order");
    rec.qs.attribute = expected;
    rec.qs.bits = r.get<std::uint8_t>();
    const auto sign = r.get<std::uint8_t>();
    if (sign > 1) corrupt("signedness byte must be 0 or 1");
    rec.qs.is_signed = sign == 1;
    if (r.get<std::uint8_t>() != 0) corrupt("reserved byte is nonzero");
    rec.qs.step = r.get<double>();
    if (rec.qs.bits < 2 || rec.qs.bits > 32) corrupt("bit depth out of range");
    if (!(std::isfinite(rec.qs.step) && rec.qs.step > 0.0)) corrupt("step must be positive and finite");
    rec.raw_len = r.get<std::uint64_t>();
    rec.comp_len = r.get<std::uint64_t>();
    return rec;
}

}  // namespace

std::vector<std::uint8_t> serialize_codes(std::span<const std::int64_t> codes, const QuantizerState& qs) {
    const std::size_t width = qs.code_bytes();
    std::vector<std::uint8_t> out;
    out.reserve(codes.size() * width);
    for (std::int64_t c : codes) {
        const auto bits = static_cast<std::uint64_t>(c);
        for (std::size_t b = 0; b < width; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
    return out;
}

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> data, int level) {
    z_stream zs{};
    if (deflateInit2(&zs, level, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        fail(ErrorKind::Io, "deflateInit2 failed");
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(data.size())));
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    const std::size_t produced = zs.total_out;
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) fail(ErrorKind::Io, "deflate did not finish");
    out.resize(produced);
    return out;
}

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> data, std::size_t expected_size) {
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) fail(ErrorKind::Io, "inflateInit2 failed");
    std::vector<std::uint8_t> out(expected_size);
    zs.next_in = const_cast<Bytef*>(data.data());
    zs.avail_in = static_cast<uInt>(data.size());
    // One spare byte so that over-long streams are detected.
    std::uint8_t spare = 0;
    zs.next_out = expected_size ? out.data() : &spare;
    zs.avail_out = static_cast<uInt>(expected_size ? expected_size : 1);
    int rc = inflate(&zs, Z_FINISH);
    if (rc == Z_BUF_ERROR && zs.avail_out == 0 && expected_size) {
        zs.next_out = &spare;
        zs.avail_out = 1;
        rc = inflate(&zs, Z_FINISH);
    }
    const std::size_t produced = zs.total_out;
    const std::size_t unused_in = zs.avail_in;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) corrupt("DEFLATE stream is damaged or incomplete");
    if (produced != expected_size)
        corrupt("stream inflated to " + std::to_string(produced) + " bytes, expected " +
                std::to_string(expected_size));
    if (unused_in != 0) corrupt("trailing bytes after DEFLATE stream");
    return out;
}

std::vector<std::uint8_t> encode(const QuantizedScene& input, Ordering order) {
    input.validate();
    const std::vector<double> positions = decoded_positions(input);
    const Aabb aabb = compute_aabb(positions);
    QuantizedScene scene = order == Ordering::Morton ? input.permuted(morton_order(input)) : input;

    std::vector<std::uint8_t> out(kContainerMagic.begin(), kContainerMagic.end());
    detail::put_le<std::uint16_t>(out, kContainerVersion);
    detail::put_le<std::uint16_t>(out, order == Ordering::Morton ? kFlagMorton : 0);
    detail::put_le<std::uint64_t>(out, scene.count);
    for (int a = 0; a < 3; ++a) detail::put_le(out, aabb.min[a]);
    for (int a = 0; a < 3; ++a) detail::put_le(out, aabb.max[a]);
    for (Attribute a : kAllAttributes) {
        const QuantizerState& qs = scene.quantizers[index_of(a)];
        const auto raw = serialize_codes(scene.codes_of(a), qs);
        const auto packed = deflate_raw(raw);
        out.push_back(static_cast<std::uint8_t>(a));
        out.push_back(static_cast<std::uint8_t>(qs.bits));
        out.push_back(qs.is_signed ? 1 : 0);
        out.push_back(0);
        detail::put_le(out, qs.step);
        detail::put_le<std::uint64_t>(out, raw.size());
        detail::put_le<std::uint64_t>(out, packed.size());
        out.insert(out.end(), packed.begin(), packed.end());
    }
    detail::put_le<std::uint32_t>(out, crc_of(out));
    return out;
}

DecodedContainer decode(std::span<const std::uint8_t> bytes) {
    Reader r(checked_body(bytes));
    const Header h = read_header(r);
    DecodedContainer out;
    out.morton_ordered = (h.flags & kFlagMorton) != 0;
    out.aabb = h.aabb;
    out.scene.count = static_cast<std::size_t>(h.count);
    for (Attribute a : kAllAttributes) {
        const Record rec = read_record(r, a);
        const std::size_t width = rec.qs.code_bytes();
        // Bound the element count by the remaining bytes before multiplying.
        if (h.count > r.remaining() * 1032ULL + 1) corrupt("Gaussian count exceeds what the streams can hold");
        const std::uint64_t expected = h.count * arity(a) * width;
        if (rec.raw_len != expected)
            corrupt("raw length " + std::to_string(rec.raw_len) + " for " + std::string(attribute_name(a)) +
                    " does not match count (expected " + std::to_string(expected) + ")");
        const auto packed = r.take(rec.comp_len);
        const auto raw = inflate_raw(packed, static_cast<std::size_t>(rec.raw_len));

        auto& codes = out.scene.codes_of(a);
        codes.resize(static_cast<std::size_t>(h.count * arity(a)));
        const std::int64_t lo = -rec.qs.q_neg(), hi = rec.qs.q_pos();
        for (std::size_t i = 0; i < codes.size(); ++i) {
            std::uint64_t bits = 0;
            for (std::size_t b = 0; b < width; ++b) bits |= std::uint64_t(raw[i * width + b]) << (8 * b);
            std::int64_t v;
            if (rec.qs.is_signed) {
                const unsigned shift = static_cast<unsigned>(64 - 8 * width);
                v = static_cast<std::int64_t>(bits << shift) >> shift;
            } else {
                v = static_cast<std::int64_t>(bits);
            }
            if (v < lo || v > hi)
                corrupt("code " + std::to_string(v) + " outside range for " + std::string(attribute_name(a)));
            codes[i] = v;
        }
        out.scene.quantizers[index_of(a)] = rec.qs;
    }
    if (r.remaining() != 0) corrupt(std::to_string(r.remaining()) + " trailing bytes");
    return out;
}

StreamSizes stream_sizes(std::span<const std::uint8_t> bytes) {
    Reader r(checked_body(bytes));
    read_header(r);
    StreamSizes sizes;
    for (Attribute a : kAllAttributes) {
        const Record rec = read_record(r, a);
        sizes.raw[index_of(a)] = rec.raw_len;
        sizes.compressed[index_of(a)] = rec.comp_len;
        r.take(rec.comp_len);
    }
    return sizes;
}

bool looks_like_container(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 4 && std::equal(kContainerMagic.begin(), kContainerMagic.end(), bytes.begin());
}

double entropy_bits(std::span<const std::int64_t> codes) {
    if (codes.empty()) fail(ErrorKind::InvalidArgument, "entropy of an empty code array");
    std::map<std::int64_t, std::size_t> histogram;
    for (std::int64_t c : codes) ++histogram[c];
    const double n = static_cast<double>(codes.size());
    double h = 0.0;
    for (const auto& [symbol, count] : histogram) {
        const double p = static_cast<double>(count) / n;
        h -= p * std::log2(p);
    }
    return h;
}

}  // namespace elmgs
