#include "meshauth/ot.hpp"

#include <gmp.h>

#include <cstring>
#include <stdexcept>

#include "meshauth/sha256.hpp"

namespace meshauth {

namespace {

using Party = DuplexChannel::Party;

Party other(Party p) { return p == Party::A ? Party::B : Party::A; }

// RFC 3526 group 5: 1536-bit MODP prime, generator 2.
const char* kModp1536Hex =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
    "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
    "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D"
    "C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
    "83655D23DCA3AD961C62F356208552BB9ED529077096966D"
    "670C354E4ABC9804F1746C08CA237327FFFFFFFFFFFFFFFF";

constexpr size_t kElemBytes = 192;

struct Group {
    mpz_t p;
    mpz_t g;
    Group() {
        mpz_init_set_str(p, kModp1536Hex, 16);
        mpz_init_set_ui(g, 2);
    }
    ~Group() {
        mpz_clear(p);
        mpz_clear(g);
    }
};

const Group& group() {
    static Group g;
    return g;
}

Bytes elem_bytes(const mpz_t v) {
    Bytes out(kElemBytes, 0);
    size_t count = 0;
    mpz_export(out.data() + (kElemBytes - (mpz_sizeinbase(v, 2) + 7) / 8), &count, 1, 1, 1, 0, v);
    return out;
}

void elem_from_bytes(mpz_t out, const Bytes& b, size_t offset) {
    if (offset + kElemBytes > b.size()) throw std::invalid_argument("ot: truncated group element");
    mpz_import(out, kElemBytes, 1, 1, 1, 0, b.data() + offset);
}

void random_exponent(mpz_t out, Rng& rng) {
    // 1536 random bits reduced mod (p - 1); ample for a DH exponent here.
    Bytes buf(kElemBytes);
    for (auto& x : buf) x = static_cast<uint8_t>(rng.next_u64());
    mpz_import(out, buf.size(), 1, 1, 1, 0, buf.data());
    mpz_t pm1;
    mpz_init(pm1);
    mpz_sub_ui(pm1, group().p, 1);
    mpz_mod(out, out, pm1);
    mpz_add_ui(out, out, 1);
    mpz_clear(pm1);
}

// Per-transfer key stream derived from the shared group element.
Bytes ot_pad(const mpz_t shared, uint32_t index, size_t len) {
    Bytes info = u32_be(index);
    info.insert(info.begin(), {'o', 't', '-', 'p'});
    return hkdf(elem_bytes(shared), Bytes{}, info, len);
}

Bytes xor_bytes(const Bytes& a, const Bytes& b) {
    if (a.size() != b.size()) throw std::invalid_argument("ot: xor length mismatch");
    Bytes out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
    return out;
}

// Interleaved DH 1-of-2 OT over arbitrary equal-length byte strings.
// Flight order: sender, receiver, sender (1.5 round trips).
std::vector<Bytes> dh_ot_strings(DuplexChannel& ch, Party sender_party,
                                 const std::vector<std::array<Bytes, 2>>& pairs,
                                 const BitVec& choices, Rng& sender_rng, Rng& receiver_rng) {
    if (pairs.size() != choices.size()) throw std::invalid_argument("ot: pair/choice mismatch");
    const size_t n = pairs.size();
    const Party receiver_party = other(sender_party);
    const Group& grp = group();

    // Sender: A = g^a.
    mpz_t a, big_a;
    mpz_inits(a, big_a, nullptr);
    random_exponent(a, sender_rng);
    mpz_powm(big_a, grp.g, a, grp.p);
    ch.send(sender_party, elem_bytes(big_a));

    // Receiver: B_i = g^{b_i} * A^{c_i}.
    Bytes msg_a = ch.recv(receiver_party);
    mpz_t recv_a;
    mpz_init(recv_a);
    elem_from_bytes(recv_a, msg_a, 0);
    Bytes flight2;
    std::vector<Bytes> b_exp(n);  // receiver exponents, kept as raw bytes
    mpz_t exp_tmp;
    mpz_init(exp_tmp);
    for (size_t i = 0; i < n; ++i) {
        random_exponent(exp_tmp, receiver_rng);
        b_exp[i] = elem_bytes(exp_tmp);
        mpz_t big_b;
        mpz_init(big_b);
        mpz_powm(big_b, grp.g, exp_tmp, grp.p);
        if (choices[i]) {
            mpz_mul(big_b, big_b, recv_a);
            mpz_mod(big_b, big_b, grp.p);
        }
        Bytes eb = elem_bytes(big_b);
        flight2.insert(flight2.end(), eb.begin(), eb.end());
        mpz_clear(big_b);
    }
    ch.send(receiver_party, std::move(flight2));

    // Sender: k0 = H(B^a), k1 = H((B/A)^a); ciphertexts for both rows.
    Bytes msg_b = ch.recv(sender_party);
    Bytes flight3;
    mpz_t big_b, shared0, shared1, a_inv_a;
    mpz_inits(big_b, shared0, shared1, a_inv_a, nullptr);
    mpz_invert(a_inv_a, big_a, grp.p);  // A^{-1}
    for (size_t i = 0; i < n; ++i) {
        elem_from_bytes(big_b, msg_b, i * kElemBytes);
        mpz_powm(shared0, big_b, a, grp.p);
        mpz_mul(shared1, big_b, a_inv_a);
        mpz_mod(shared1, shared1, grp.p);
        mpz_powm(shared1, shared1, a, grp.p);
        Bytes c0 = xor_bytes(pairs[i][0], ot_pad(shared0, static_cast<uint32_t>(i), pairs[i][0].size()));
        Bytes c1 = xor_bytes(pairs[i][1], ot_pad(shared1, static_cast<uint32_t>(i), pairs[i][1].size()));
        flight3.insert(flight3.end(), c0.begin(), c0.end());
        flight3.insert(flight3.end(), c1.begin(), c1.end());
    }
    ch.send(sender_party, std::move(flight3));

    // Receiver: k_c = H(A^{b_i}).
    Bytes msg_c = ch.recv(receiver_party);
    std::vector<Bytes> out(n);
    mpz_t shared;
    mpz_init(shared);
    size_t offset = 0;
    for (size_t i = 0; i < n; ++i) {
        const size_t len = pairs[i][0].size();
        elem_from_bytes(exp_tmp, b_exp[i], 0);
        mpz_powm(shared, recv_a, exp_tmp, grp.p);
        Bytes ct(msg_c.begin() + offset + (choices[i] ? len : 0),
                 msg_c.begin() + offset + (choices[i] ? 2 * len : len));
        out[i] = xor_bytes(ct, ot_pad(shared, static_cast<uint32_t>(i), len));
        offset += 2 * len;
    }
    mpz_clears(a, big_a, recv_a, big_b, shared0, shared1, a_inv_a, shared, exp_tmp, nullptr);
    return out;
}

Bytes label_bytes(const Label& l) { return serialize_label(l); }

Label label_from(const Bytes& b) {
    if (b.size() != 16) throw std::invalid_argument("ot: bad label length");
    return deserialize_label(b, 0);
}

// Row hash for the extension: 16-byte mask from (index, kappa-bit row).
Label row_mask(uint32_t index, const Bytes& row) {
    Bytes msg = u32_be(index);
    msg.insert(msg.end(), row.begin(), row.end());
    Digest256 d = sha256(msg);
    Bytes b(d.begin(), d.begin() + 16);
    return deserialize_label(b, 0);
}

}  // namespace

std::vector<Label> DealerOt::run(DuplexChannel& ch, Party sender_party,
                                 const std::vector<LabelPair>& sender_pairs,
                                 const BitVec& receiver_choices, Rng&, Rng&) {
    if (sender_pairs.size() != receiver_choices.size())
        throw std::invalid_argument("ot: pair/choice mismatch");
    const Party receiver_party = other(sender_party);
    ch.send(receiver_party, pack_bits_msb(receiver_choices));
    Bytes packed = ch.recv(sender_party);
    BitVec choices = unpack_bits_msb(packed, sender_pairs.size());
    Bytes flight;
    for (size_t i = 0; i < sender_pairs.size(); ++i) {
        // Only the chosen label is ever serialized.
        Bytes lb = label_bytes(sender_pairs[i][choices[i]]);
        flight.insert(flight.end(), lb.begin(), lb.end());
    }
    ch.send(sender_party, std::move(flight));
    Bytes msg = ch.recv(receiver_party);
    std::vector<Label> out(sender_pairs.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = deserialize_label(msg, i * 16);
    return out;
}

std::vector<Label> DhBaseOt::run(DuplexChannel& ch, Party sender_party,
                                 const std::vector<LabelPair>& sender_pairs,
                                 const BitVec& receiver_choices, Rng& sender_rng,
                                 Rng& receiver_rng) {
    std::vector<std::array<Bytes, 2>> pairs(sender_pairs.size());
    for (size_t i = 0; i < sender_pairs.size(); ++i)
        pairs[i] = {label_bytes(sender_pairs[i][0]), label_bytes(sender_pairs[i][1])};
    auto strings =
        dh_ot_strings(ch, sender_party, pairs, receiver_choices, sender_rng, receiver_rng);
    std::vector<Label> out(strings.size());
    for (size_t i = 0; i < strings.size(); ++i) out[i] = label_from(strings[i]);
    return out;
}

std::vector<Label> IknpOt::run(DuplexChannel& ch, Party sender_party,
                               const std::vector<LabelPair>& sender_pairs,
                               const BitVec& receiver_choices, Rng& sender_rng,
                               Rng& receiver_rng) {
    if (sender_pairs.size() != receiver_choices.size())
        throw std::invalid_argument("ot: pair/choice mismatch");
    const size_t m = sender_pairs.size();
    const Party receiver_party = other(sender_party);

    // Receiver picks the random matrix T (kappa columns of m bits) and, via
    // base OTs run in the reverse direction, hands the sender column
    // q^j = t^j (s_j = 0) or t^j xor r (s_j = 1).
    std::vector<BitVec> t_cols(kappa_);
    std::vector<std::array<Bytes, 2>> col_pairs(kappa_);
    for (size_t j = 0; j < kappa_; ++j) {
        t_cols[j].resize(m);
        for (size_t i = 0; i < m; ++i) t_cols[j][i] = receiver_rng.next_bit();
        BitVec masked(m);
        for (size_t i = 0; i < m; ++i) masked[i] = t_cols[j][i] ^ receiver_choices[i];
        col_pairs[j] = {pack_bits_msb(t_cols[j]), pack_bits_msb(masked)};
    }
    BitVec s(kappa_);
    for (size_t j = 0; j < kappa_; ++j) s[j] = sender_rng.next_bit();

    // Reverse roles: the extension receiver is the base-OT sender.
    auto q_packed = dh_ot_strings(ch, receiver_party, col_pairs, s, receiver_rng, sender_rng);

    std::vector<BitVec> q_cols(kappa_);
    for (size_t j = 0; j < kappa_; ++j) q_cols[j] = unpack_bits_msb(q_packed[j], m);

    auto gather_row = [&](const std::vector<BitVec>& cols, size_t i) {
        BitVec row(kappa_);
        for (size_t j = 0; j < kappa_; ++j) row[j] = cols[j][i];
        return pack_bits_msb(row);
    };
    Bytes s_packed = pack_bits_msb(s);

    // Sender: y_{i,b} = x_{i,b} xor H(i, q_i xor b*s).
    Bytes flight;
    for (size_t i = 0; i < m; ++i) {
        Bytes q_row = gather_row(q_cols, i);
        Bytes q_row_s = xor_bytes(q_row, s_packed);
        Label y0 = sender_pairs[i][0] ^ row_mask(static_cast<uint32_t>(i), q_row);
        Label y1 = sender_pairs[i][1] ^ row_mask(static_cast<uint32_t>(i), q_row_s);
        Bytes b0 = label_bytes(y0);
        Bytes b1 = label_bytes(y1);
        flight.insert(flight.end(), b0.begin(), b0.end());
        flight.insert(flight.end(), b1.begin(), b1.end());
    }
    ch.send(sender_party, std::move(flight));

    // Receiver: x_{i,r_i} = y_{i,r_i} xor H(i, t_i).
    Bytes msg = ch.recv(receiver_party);
    std::vector<Label> out(m);
    for (size_t i = 0; i < m; ++i) {
        Label y = deserialize_label(msg, i * 32 + (receiver_choices[i] ? 16 : 0));
        out[i] = y ^ row_mask(static_cast<uint32_t>(i), gather_row(t_cols, i));
    }
    return out;
}

std::unique_ptr<OtProtocol> make_ot(const std::string& name) {
    if (name == "dealer") return std::make_unique<DealerOt>();
    if (name == "dh-base") return std::make_unique<DhBaseOt>();
    if (name == "iknp") return std::make_unique<IknpOt>();
    throw std::invalid_argument("unknown ot protocol: " + name);
}

}  // namespace meshauth
