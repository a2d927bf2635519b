#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <string>

namespace homecrawl {

// Minimal SHA-1, only used for UUIDv5 derivation.
class Sha1 {
public:
    Sha1() = default;

    void update(const uint8_t* data, size_t len) {
        for (size_t i = 0; i < len; ++i) {
            buf_[buflen_++] = data[i];
            total_++;
            if (buflen_ == 64) {
                process(buf_);
                buflen_ = 0;
            }
        }
    }

    std::array<uint8_t, 20> digest() {
        uint64_t bits = total_ * 8;
        uint8_t pad = 0x80;
        update(&pad, 1);
        uint8_t zero = 0;
        while (buflen_ != 56) update(&zero, 1);
        uint8_t lenbuf[8];
        for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<uint8_t>(bits >> (56 - 8 * i));
        update(lenbuf, 8);
        std::array<uint8_t, 20> out{};
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 4; ++j)
                out[i * 4 + j] = static_cast<uint8_t>(h_[i] >> (24 - 8 * j));
        return out;
    }

private:
    static uint32_t rol(uint32_t v, int n) { return (v << n) | (v >> (32 - n)); }

    void process(const uint8_t* p) {
        uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (uint32_t(p[i * 4]) << 24) | (uint32_t(p[i * 4 + 1]) << 16) |
                   (uint32_t(p[i * 4 + 2]) << 8) | uint32_t(p[i * 4 + 3]);
        for (int i = 16; i < 80; ++i)
            w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
        for (int i = 0; i < 80; ++i) {
            uint32_t f, k;
            if (i < 20) { f = (b & c) | (~b & d); k = 0x5A827999; }
            else if (i < 40) { f = b ^ c ^ d; k = 0x6ED9EBA1; }
            else if (i < 60) { f = (b & c) | (b & d) | (c & d); k = 0x8F1BBCDC; }
            else { f = b ^ c ^ d; k = 0xCA62C1D6; }
            uint32_t t = rol(a, 5) + f + e + k + w[i];
            e = d; d = c; c = rol(b, 30); b = a; a = t;
        }
        h_[0] += a; h_[1] += b; h_[2] += c; h_[3] += d; h_[4] += e;
    }

    uint32_t h_[5] = {0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0};
    uint8_t buf_[64]{};
    size_t buflen_ = 0;
    uint64_t total_ = 0;
};

// RFC 4122 DNS namespace; all stable identifiers in the crawler derive from it.
inline const std::array<uint8_t, 16>& uuid_namespace_dns() {
    static const std::array<uint8_t, 16> ns = {0x6b, 0xa7, 0xb8, 0x10, 0x9d, 0xad,
                                               0x11, 0xd1, 0x80, 0xb4, 0x00, 0xc0,
                                               0x4f, 0xd4, 0x30, 0xc8};
    return ns;
}

// Name-based UUID (version 5). Same name, same id, across runs and hosts.
inline std::string uuid5(const std::string& name) {
    Sha1 sha;
    const auto& ns = uuid_namespace_dns();
    sha.update(ns.data(), ns.size());
    sha.update(reinterpret_cast<const uint8_t*>(name.data()), name.size());
    auto d = sha.digest();
    d[6] = static_cast<uint8_t>((d[6] & 0x0F) | 0x50);
    d[8] = static_cast<uint8_t>((d[8] & 0x3F) | 0x80);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(36);
    for (int i = 0; i < 16; ++i) {
        if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
        out.push_back(hex[d[i] >> 4]);
        out.push_back(hex[d[i] & 0x0F]);
    }
    return out;
}

}  // namespace homecrawl
