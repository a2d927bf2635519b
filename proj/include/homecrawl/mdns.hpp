#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace homecrawl::mdns {

class MdnsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class Truncated : public MdnsError {
public:
    using MdnsError::MdnsError;
};
class PointerLoop : public MdnsError {
public:
    using MdnsError::MdnsError;
};
class LabelTooLong : public MdnsError {
public:
    using MdnsError::MdnsError;
};
class NameTooLong : public MdnsError {
public:
    using MdnsError::MdnsError;
};

inline constexpr uint16_t kTypePtr = 12;
inline constexpr uint16_t kTypeSrv = 33;
inline constexpr uint16_t kTypeTxt = 16;
inline constexpr uint16_t kTypeA = 1;

struct Question {
    std::string name;  // dotted labels
    uint16_t rrtype = 0;
    uint16_t rclass = 1;
};

struct Record {
    std::string name;
    uint16_t rrtype = 0;
    uint16_t rclass = 1;
    uint32_t ttl = 0;
    std::vector<uint8_t> rdata;   // raw, re-emitted verbatim by the encoder
    std::string rdataName;        // decompressed target for PTR/SRV records
};

struct MdnsPacket {
    uint16_t id = 0;
    uint16_t flags = 0;
    std::vector<Question> questions;
    std::vector<Record> answers;
    std::vector<Record> authority;
    std::vector<Record> additional;
};

// --- encoding ---------------------------------------------------------------

inline void append_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(static_cast<uint8_t>(v >> 8));
    b.push_back(static_cast<uint8_t>(v));
}

inline void append_u32(std::vector<uint8_t>& b, uint32_t v) {
    b.push_back(static_cast<uint8_t>(v >> 24));
    b.push_back(static_cast<uint8_t>(v >> 16));
    b.push_back(static_cast<uint8_t>(v >> 8));
    b.push_back(static_cast<uint8_t>(v));
}

// Uncompressed name encoding; the encoder never emits compression pointers.
inline void append_name(std::vector<uint8_t>& b, const std::string& name) {
    size_t total = 0;
    size_t start = 0;
    while (start <= name.size()) {
        size_t dot = name.find('.', start);
        size_t end = dot == std::string::npos ? name.size() : dot;
        size_t len = end - start;
        if (len > 63) throw LabelTooLong("label exceeds 63 bytes in: " + name);
        if (len > 0) {
            total += len + 1;
            if (total > 255) throw NameTooLong("name exceeds 255 bytes: " + name);
            b.push_back(static_cast<uint8_t>(len));
            b.insert(b.end(), name.begin() + start, name.begin() + end);
        }
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    b.push_back(0);
}

inline std::vector<uint8_t> encode_name(const std::string& name) {
    std::vector<uint8_t> b;
    append_name(b, name);
    return b;
}

inline void append_record(std::vector<uint8_t>& b, const Record& r) {
    append_name(b, r.name);
    append_u16(b, r.rrtype);
    append_u16(b, r.rclass);
    append_u32(b, r.ttl);
    if (r.rdata.size() > 0xFFFF) throw MdnsError("rdata too long");
    append_u16(b, static_cast<uint16_t>(r.rdata.size()));
    b.insert(b.end(), r.rdata.begin(), r.rdata.end());
}

inline std::vector<uint8_t> encode_mdns(const MdnsPacket& p) {
    std::vector<uint8_t> b;
    append_u16(b, p.id);
    append_u16(b, p.flags);
    append_u16(b, static_cast<uint16_t>(p.questions.size()));
    append_u16(b, static_cast<uint16_t>(p.answers.size()));
    append_u16(b, static_cast<uint16_t>(p.authority.size()));
    append_u16(b, static_cast<uint16_t>(p.additional.size()));
    for (const auto& q : p.questions) {
        append_name(b, q.name);
        append_u16(b, q.rrtype);
        append_u16(b, q.rclass);
    }
    for (const auto& r : p.answers) append_record(b, r);
    for (const auto& r : p.authority) append_record(b, r);
    for (const auto& r : p.additional) append_record(b, r);
    return b;
}

// One PTR question for the given service name.
inline std::vector<uint8_t> encode_mdns_query(const std::string& serviceName) {
    MdnsPacket p;
    p.questions.push_back({serviceName, kTypePtr, 1});
    return encode_mdns(p);
}

// --- parsing ----------------------------------------------------------------

namespace detail {

class Reader {
public:
    Reader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

    size_t pos() const { return pos_; }
    void seek(size_t p) { pos_ = p; }

    uint8_t u8() {
        if (pos_ >= size_) throw Truncated("unexpected end of packet");
        return data_[pos_++];
    }
    uint16_t u16() {
        uint16_t hi = u8();
        return static_cast<uint16_t>(hi << 8 | u8());
    }
    uint32_t u32() {
        uint32_t hi = u16();
        return hi << 16 | u16();
    }

    std::vector<uint8_t> bytes(size_t n) {
        if (pos_ + n > size_) throw Truncated("rdata past end of packet");
        std::vector<uint8_t> out(data_ + pos_, data_ + pos_ + n);
        pos_ += n;
        return out;
    }

    // DNS name with compression pointers. Pointers must target strictly
    // earlier offsets; combined with a jump budget this rejects every loop.
    std::string name() {
        std::string out;
        size_t total = 0;
        size_t jumps = 0;
        size_t pos = pos_;
        bool jumped = false;
        while (true) {
            if (pos >= size_) throw Truncated("name past end of packet");
            uint8_t len = data_[pos];
            if ((len & 0xC0) == 0xC0) {
                if (pos + 1 >= size_) throw Truncated("truncated compression pointer");
                size_t target = (static_cast<size_t>(len & 0x3F) << 8) | data_[pos + 1];
                if (target >= pos) throw PointerLoop("forward or self compression pointer");
                if (++jumps > size_) throw PointerLoop("compression pointer chain too long");
                if (!jumped) pos_ = pos + 2;
                jumped = true;
                pos = target;
                continue;
            }
            if ((len & 0xC0) != 0) throw MdnsError("reserved label type");
            if (len > 63) throw LabelTooLong("label exceeds 63 bytes");
            if (len == 0) {
                if (!jumped) pos_ = pos + 1;
                return out;
            }
            if (pos + 1 + len > size_) throw Truncated("label past end of packet");
            total += len + 1;
            if (total > 255) throw NameTooLong("name exceeds 255 bytes");
            if (!out.empty()) out.push_back('.');
            out.append(reinterpret_cast<const char*>(data_ + pos + 1), len);
            pos += 1 + len;
        }
    }

private:
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

inline Record parse_record(Reader& r, const uint8_t* base, size_t size) {
    Record rec;
    rec.name = r.name();
    rec.rrtype = r.u16();
    rec.rclass = r.u16();
    rec.ttl = r.u32();
    uint16_t rdlen = r.u16();
    size_t rdStart = r.pos();
    rec.rdata = r.bytes(rdlen);
    if (rec.rrtype == kTypePtr && rdlen > 0) {
        Reader sub(base, size);
        sub.seek(rdStart);
        rec.rdataName = sub.name();
    } else if (rec.rrtype == kTypeSrv && rdlen > 6) {
        Reader sub(base, size);
        sub.seek(rdStart + 6);  // skip priority/weight/port
        rec.rdataName = sub.name();
    }
    return rec;
}

}  // namespace detail

inline MdnsPacket parse_mdns(const std::vector<uint8_t>& bytes) {
    detail::Reader r(bytes.data(), bytes.size());
    MdnsPacket p;
    p.id = r.u16();
    p.flags = r.u16();
    uint16_t qd = r.u16(), an = r.u16(), ns = r.u16(), ar = r.u16();
    for (uint16_t i = 0; i < qd; ++i) {
        Question q;
        q.name = r.name();
        q.rrtype = r.u16();
        q.rclass = r.u16();
        p.questions.push_back(std::move(q));
    }
    for (uint16_t i = 0; i < an; ++i)
        p.answers.push_back(detail::parse_record(r, bytes.data(), bytes.size()));
    for (uint16_t i = 0; i < ns; ++i)
        p.authority.push_back(detail::parse_record(r, bytes.data(), bytes.size()));
    for (uint16_t i = 0; i < ar; ++i)
        p.additional.push_back(detail::parse_record(r, bytes.data(), bytes.size()));
    return p;
}

// rdata builders used by responders and tests
inline std::vector<uint8_t> ptr_rdata(const std::string& target) { return encode_name(target); }

inline std::vector<uint8_t> srv_rdata(uint16_t priority, uint16_t weight, uint16_t port,
                                      const std::string& target) {
    std::vector<uint8_t> b;
    append_u16(b, priority);
    append_u16(b, weight);
    append_u16(b, port);
    append_name(b, target);
    return b;
}

inline std::vector<uint8_t> a_rdata(const std::string& dottedQuad) {
    std::vector<uint8_t> b;
    size_t start = 0;
    for (int i = 0; i < 4; ++i) {
        size_t dot = dottedQuad.find('.', start);
        std::string part = dottedQuad.substr(start, dot == std::string::npos ? std::string::npos
                                                                             : dot - start);
        b.push_back(static_cast<uint8_t>(std::stoi(part)));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (b.size() != 4) throw MdnsError("bad IPv4 address: " + dottedQuad);
    return b;
}

inline std::string a_rdata_to_ip(const std::vector<uint8_t>& rdata) {
    if (rdata.size() != 4) return {};
    return std::to_string(rdata[0]) + "." + std::to_string(rdata[1]) + "." +
           std::to_string(rdata[2]) + "." + std::to_string(rdata[3]);
}

}  // namespace homecrawl::mdns
