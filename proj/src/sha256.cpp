#include "meshauth/sha256.hpp"

namespace meshauth {

const std::array<uint32_t, 64>& Sha256::round_constants() {
    static const std::array<uint32_t, 64> k = {
        0x428a2f98u, 0x71374491u, 0xb5c0fbcfu, 0xe9b5dba5u, 0x3956c25bu, 0x59f111f1u,
        0x923f82a4u, 0xab1c5ed5u, 0xd807aa98u, 0x12835b01u, 0x243185beu, 0x550c7dc3u,
        0x72be5d74u, 0x80deb1feu, 0x9bdc06a7u, 0xc19bf174u, 0xe49b69c1u, 0xefbe4786u,
        0x0fc19dc6u, 0x240ca1ccu, 0x2de92c6fu, 0x4a7484aau, 0x5cb0a9dcu, 0x76f988dau,
        0x983e5152u, 0xa831c66du, 0xb00327c8u, 0xbf597fc7u, 0xc6e00bf3u, 0xd5a79147u,
        0x06ca6351u, 0x14292967u, 0x27b70a85u, 0x2e1b2138u, 0x4d2c6dfcu, 0x53380d13u,
        0x650a7354u, 0x766a0abbu, 0x81c2c92eu, 0x92722c85u, 0xa2bfe8a1u, 0xa81a664bu,
        0xc24b8b70u, 0xc76c51a3u, 0xd192e819u, 0xd6990624u, 0xf40e3585u, 0x106aa070u,
        0x19a4c116u, 0x1e376c08u, 0x2748774cu, 0x34b0bcb5u, 0x391c0cb3u, 0x4ed8aa4au,
        0x5b9cca4fu, 0x682e6ff3u, 0x748f82eeu, 0x78a5636fu, 0x84c87814u, 0x8cc70208u,
        0x90befffau, 0xa4506cebu, 0xbef9a3f7u, 0xc67178f2u};
    return k;
}

void Sha256::compress(const uint8_t* block) {
    const auto& k = round_constants();
    uint32_t w[64];
    for (int i = 0; i < 16; ++i) {
        w[i] = (uint32_t(block[4 * i]) << 24) | (uint32_t(block[4 * i + 1]) << 16) |
               (uint32_t(block[4 * i + 2]) << 8) | uint32_t(block[4 * i + 3]);
    }
    for (int i = 16; i < 64; ++i) {
        uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
        uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
        w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3];
    uint32_t e = state_[4], f = state_[5], g = state_[6], h = state_[7];
    for (int i = 0; i < 64; ++i) {
        uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
        uint32_t ch = (e & f) ^ (~e & g);
        uint32_t t1 = h + s1 + ch + k[i] + w[i];
        uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
        uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
        uint32_t t2 = s0 + maj;
        h = g;
        g = f;
        f = e;
        e = d + t1;
        d = c;
        c = b;
        b = a;
        a = t1 + t2;
    }
    state_[0] += a;
    state_[1] += b;
    state_[2] += c;
    state_[3] += d;
    state_[4] += e;
    state_[5] += f;
    state_[6] += g;
    state_[7] += h;
}

Bytes hmac_sha256(const Bytes& key, const Bytes& msg) {
    Bytes k = key;
    if (k.size() > 64) {
        Digest256 d = sha256(k);
        k.assign(d.begin(), d.end());
    }
    k.resize(64, 0);
    Bytes ipad(64), opad(64);
    for (int i = 0; i < 64; ++i) {
        ipad[i] = k[i] ^ 0x36;
        opad[i] = k[i] ^ 0x5c;
    }
    Sha256 inner;
    inner.update(ipad);
    inner.update(msg);
    Digest256 id = inner.finish();
    Sha256 outer;
    outer.update(opad);
    outer.update(id.data(), id.size());
    Digest256 od = outer.finish();
    return Bytes(od.begin(), od.end());
}

Bytes hkdf_extract(const Bytes& salt, const Bytes& ikm) {
    Bytes s = salt.empty() ? Bytes(32, 0) : salt;
    return hmac_sha256(s, ikm);
}

Bytes hkdf_expand(const Bytes& prk, const Bytes& info, size_t out_len) {
    if (out_len > 255 * 32) throw std::invalid_argument("hkdf_expand: output too long");
    Bytes okm;
    Bytes t;
    uint8_t counter = 1;
    while (okm.size() < out_len) {
        Bytes block = t;
        block.insert(block.end(), info.begin(), info.end());
        block.push_back(counter++);
        t = hmac_sha256(prk, block);
        okm.insert(okm.end(), t.begin(), t.end());
    }
    okm.resize(out_len);
    return okm;
}

Bytes hkdf(const Bytes& ikm, const Bytes& salt, const Bytes& info, size_t out_len) {
    return hkdf_expand(hkdf_extract(salt, ikm), info, out_len);
}

Bytes derive_session_salt(const Digest256& golden_digest, const Bytes& challenge_bytes,
                          uint64_t epoch, size_t out_len) {
    Bytes info = challenge_bytes;
    Bytes ep = u64_be(epoch);
    info.insert(info.end(), ep.begin(), ep.end());
    return hkdf(to_bytes(golden_digest), Bytes{}, info, out_len);
}

}  // namespace meshauth
