#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>

#include "meshauth/bits.hpp"

namespace meshauth {

using Digest256 = std::array<uint8_t, 32>;

inline Bytes to_bytes(const Digest256& d) { return Bytes(d.begin(), d.end()); }

// FIPS 180-4 SHA-256.
class Sha256 {
public:
    Sha256() { reset(); }

    void reset() {
        state_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                  0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        buffered_ = 0;
        total_ = 0;
    }

    void update(const uint8_t* data, size_t len) {
        total_ += len;
        while (len > 0) {
            size_t take = std::min(len, size_t(64) - buffered_);
            std::memcpy(buf_.data() + buffered_, data, take);
            buffered_ += take;
            data += take;
            len -= take;
            if (buffered_ == 64) {
                compress(buf_.data());
                buffered_ = 0;
            }
        }
    }

    void update(const Bytes& data) { update(data.data(), data.size()); }

    Digest256 finish() {
        uint64_t bitlen = total_ * 8;
        uint8_t pad = 0x80;
        update(&pad, 1);
        uint8_t zero = 0;
        while (buffered_ != 56) update(&zero, 1);
        uint8_t lenbuf[8];
        for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<uint8_t>(bitlen >> (56 - 8 * i));
        total_ -= 8;  // length field is not message data
        update(lenbuf, 8);
        Digest256 out;
        for (int i = 0; i < 8; ++i) {
            out[4 * i] = static_cast<uint8_t>(state_[i] >> 24);
            out[4 * i + 1] = static_cast<uint8_t>(state_[i] >> 16);
            out[4 * i + 2] = static_cast<uint8_t>(state_[i] >> 8);
            out[4 * i + 3] = static_cast<uint8_t>(state_[i]);
        }
        return out;
    }

    static const std::array<uint32_t, 64>& round_constants();

private:
    static uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void compress(const uint8_t* block);

    std::array<uint32_t, 8> state_;
    std::array<uint8_t, 64> buf_;
    size_t buffered_ = 0;
    uint64_t total_ = 0;
};

inline Digest256 sha256(const Bytes& msg) {
    Sha256 h;
    h.update(msg);
    return h.finish();
}

inline Digest256 sha256(const std::string& msg) {
    return sha256(Bytes(msg.begin(), msg.end()));
}

Bytes hmac_sha256(const Bytes& key, const Bytes& msg);

// RFC 5869 extract-then-expand with HMAC-SHA-256.
Bytes hkdf_extract(const Bytes& salt, const Bytes& ikm);
Bytes hkdf_expand(const Bytes& prk, const Bytes& info, size_t out_len);
Bytes hkdf(const Bytes& ikm, const Bytes& salt, const Bytes& info, size_t out_len);

// Per-session salt: hkdf with the golden digest as keying material and the
// session context (challenge bits || epoch) as info.
Bytes derive_session_salt(const Digest256& golden_digest, const Bytes& challenge_bytes,
                          uint64_t epoch, size_t out_len);

}  // namespace meshauth
