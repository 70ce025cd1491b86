#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace meshauth {

using BitVec = std::vector<uint8_t>;  // one bit per element, values 0/1
using Bytes = std::vector<uint8_t>;

// Pack bits MSB-first into bytes; final partial byte zero-padded on the right.
inline Bytes pack_bits_msb(const BitVec& bits) {
    Bytes out((bits.size() + 7) / 8, 0);
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) out[i / 8] |= static_cast<uint8_t>(0x80u >> (i % 8));
    }
    return out;
}

inline BitVec unpack_bits_msb(const Bytes& bytes, size_t nbits) {
    if (nbits > bytes.size() * 8) throw std::invalid_argument("unpack_bits_msb: not enough bytes");
    BitVec out(nbits);
    for (size_t i = 0; i < nbits; ++i) {
        out[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
    }
    return out;
}

inline std::string to_hex(const Bytes& b) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(b.size() * 2);
    for (uint8_t x : b) {
        s.push_back(digits[x >> 4]);
        s.push_back(digits[x & 0xf]);
    }
    return s;
}

inline Bytes from_hex(const std::string& s) {
    if (s.size() % 2 != 0) throw std::invalid_argument("from_hex: odd length");
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("from_hex: bad digit");
    };
    Bytes out(s.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<uint8_t>((nib(s[2 * i]) << 4) | nib(s[2 * i + 1]));
    }
    return out;
}

// Challenge serialization for CRP dumps: MSB-first hex of the packed bits.
inline std::string bits_to_hex(const BitVec& bits) { return to_hex(pack_bits_msb(bits)); }

inline size_t hamming_distance(const Bytes& a, const Bytes& b) {
    if (a.size() != b.size()) throw std::invalid_argument("hamming_distance: size mismatch");
    size_t d = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        uint8_t x = a[i] ^ b[i];
        while (x) {
            d += x & 1u;
            x >>= 1;
        }
    }
    return d;
}

inline Bytes concat(const Bytes& a, const Bytes& b) {
    Bytes out(a);
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline Bytes u64_be(uint64_t v) {
    Bytes out(8);
    for (int i = 0; i < 8; ++i) out[i] = static_cast<uint8_t>(v >> (56 - 8 * i));
    return out;
}

inline Bytes u32_be(uint32_t v) {
    Bytes out(4);
    for (int i = 0; i < 4; ++i) out[i] = static_cast<uint8_t>(v >> (24 - 8 * i));
    return out;
}

}  // namespace meshauth
