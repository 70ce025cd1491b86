#include "meshauth/circuit.hpp"

#include <istream>
#include <sstream>
#include <stdexcept>

namespace meshauth {

size_t BooleanCircuit::and_count() const {
    size_t n = 0;
    for (const auto& g : gates)
        if (g.op == GateOp::And) ++n;
    return n;
}

BitVec evaluate_plain(const BooleanCircuit& c, const BitVec& inputs) {
    if (inputs.size() != c.input_count)
        throw std::invalid_argument("evaluate_plain: input count mismatch");
    BitVec wires(c.wire_count, 0);
    std::copy(inputs.begin(), inputs.end(), wires.begin());
    for (const auto& g : c.gates) {
        switch (g.op) {
            case GateOp::And: wires[g.out] = wires[g.a] & wires[g.b]; break;
            case GateOp::Xor: wires[g.out] = wires[g.a] ^ wires[g.b]; break;
            case GateOp::Inv: wires[g.out] = wires[g.a] ^ 1u; break;
        }
    }
    BitVec out;
    out.reserve(c.outputs.size());
    for (uint32_t w : c.outputs) out.push_back(wires[w]);
    return out;
}

CircuitBuilder::Bit CircuitBuilder::input() {
    if (inputs_closed_) throw std::logic_error("CircuitBuilder: inputs must precede gates");
    ++input_count_;
    return Bit{Bit::Kind::Wire, next_wire_++};
}

std::vector<CircuitBuilder::Bit> CircuitBuilder::inputs(size_t n) {
    std::vector<Bit> v(n);
    for (auto& b : v) b = input();
    return v;
}

CircuitBuilder::Bit CircuitBuilder::emit(GateOp op, Bit x, Bit y) {
    inputs_closed_ = true;
    Gate g;
    g.op = op;
    g.a = x.wire;
    g.b = y.wire;
    g.out = next_wire_++;
    gates_.push_back(g);
    return Bit{Bit::Kind::Wire, g.out};
}

CircuitBuilder::Bit CircuitBuilder::band(Bit x, Bit y) {
    if (x.is_const()) {
        if (!x.const_value()) return Bit::zero();
        return y;
    }
    if (y.is_const()) {
        if (!y.const_value()) return Bit::zero();
        return x;
    }
    if (x.wire == y.wire) return x;
    return emit(GateOp::And, x, y);
}

CircuitBuilder::Bit CircuitBuilder::bxor(Bit x, Bit y) {
    if (x.is_const() && y.is_const())
        return (x.const_value() ^ y.const_value()) ? Bit::one() : Bit::zero();
    if (x.is_const()) return x.const_value() ? bnot(y) : y;
    if (y.is_const()) return y.const_value() ? bnot(x) : x;
    if (x.wire == y.wire) return Bit::zero();
    return emit(GateOp::Xor, x, y);
}

CircuitBuilder::Bit CircuitBuilder::bnot(Bit x) {
    if (x.is_const()) return x.const_value() ? Bit::zero() : Bit::one();
    return emit(GateOp::Inv, x, x);
}

CircuitBuilder::Word CircuitBuilder::word_const(uint32_t v) {
    Word w;
    for (int i = 0; i < 32; ++i) w[i] = ((v >> (31 - i)) & 1u) ? Bit::one() : Bit::zero();
    return w;
}

CircuitBuilder::Word CircuitBuilder::word_xor(const Word& a, const Word& b) {
    Word out;
    for (int i = 0; i < 32; ++i) out[i] = bxor(a[i], b[i]);
    return out;
}

CircuitBuilder::Word CircuitBuilder::word_and(const Word& a, const Word& b) {
    Word out;
    for (int i = 0; i < 32; ++i) out[i] = band(a[i], b[i]);
    return out;
}

CircuitBuilder::Word CircuitBuilder::word_not(const Word& a) {
    Word out;
    for (int i = 0; i < 32; ++i) out[i] = bnot(a[i]);
    return out;
}

CircuitBuilder::Word CircuitBuilder::word_rotr(const Word& a, int n) {
    Word out;
    for (int i = 0; i < 32; ++i) out[(i + n) % 32] = a[i];
    return out;
}

CircuitBuilder::Word CircuitBuilder::word_shr(const Word& a, int n) {
    Word out;
    for (int i = 0; i < 32; ++i) out[i] = (i < n) ? Bit::zero() : a[i - n];
    return out;
}

namespace {

// Ripple-carry addition, MSB-first bit order, one AND per carry:
// carry' = ((a ^ c) & (b ^ c)) ^ c.
template <typename B, typename BuilderT>
std::vector<B> add_bits(BuilderT& bld, const std::vector<B>& a, const std::vector<B>& b) {
    size_t n = a.size();
    std::vector<B> sum(n);
    B carry = B::zero();
    for (size_t i = n; i-- > 0;) {
        B axc = bld.bxor(a[i], carry);
        B bxc = bld.bxor(b[i], carry);
        sum[i] = bld.bxor(axc, b[i]);
        if (i != 0) carry = bld.bxor(bld.band(axc, bxc), carry);
    }
    return sum;
}

}  // namespace

CircuitBuilder::Word CircuitBuilder::word_add(const Word& a, const Word& b) {
    std::vector<Bit> av(a.begin(), a.end()), bv(b.begin(), b.end());
    auto sv = add_bits(*this, av, bv);
    Word out;
    std::copy(sv.begin(), sv.end(), out.begin());
    return out;
}

std::vector<CircuitBuilder::Bit> CircuitBuilder::sha256_bits(const std::vector<Bit>& padded) {
    if (padded.size() % 512 != 0)
        throw std::invalid_argument("sha256_bits: message must be padded to 512-bit blocks");
    static const uint32_t iv[8] = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                                   0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
    std::array<Word, 8> state;
    for (int i = 0; i < 8; ++i) state[i] = word_const(iv[i]);
    const auto& k = Sha256::round_constants();

    for (size_t block = 0; block < padded.size() / 512; ++block) {
        std::vector<Word> w(64);
        for (int t = 0; t < 16; ++t)
            for (int i = 0; i < 32; ++i) w[t][i] = padded[block * 512 + t * 32 + i];
        for (int t = 16; t < 64; ++t) {
            Word s0 = word_xor(word_xor(word_rotr(w[t - 15], 7), word_rotr(w[t - 15], 18)),
                               word_shr(w[t - 15], 3));
            Word s1 = word_xor(word_xor(word_rotr(w[t - 2], 17), word_rotr(w[t - 2], 19)),
                               word_shr(w[t - 2], 10));
            w[t] = word_add(word_add(w[t - 16], s0), word_add(w[t - 7], s1));
        }
        Word a = state[0], b = state[1], c = state[2], d = state[3];
        Word e = state[4], f = state[5], g = state[6], h = state[7];
        for (int t = 0; t < 64; ++t) {
            Word s1 = word_xor(word_xor(word_rotr(e, 6), word_rotr(e, 11)), word_rotr(e, 25));
            // ch = g ^ (e & (f ^ g)); maj = a ^ ((a ^ b) & (a ^ c)) -- one AND each
            Word ch = word_xor(g, word_and(e, word_xor(f, g)));
            Word t1 = word_add(word_add(h, s1), word_add(ch, word_add(word_const(k[t]), w[t])));
            Word s0 = word_xor(word_xor(word_rotr(a, 2), word_rotr(a, 13)), word_rotr(a, 22));
            Word maj = word_xor(a, word_and(word_xor(a, b), word_xor(a, c)));
            Word t2 = word_add(s0, maj);
            h = g;
            g = f;
            f = e;
            e = word_add(d, t1);
            d = c;
            c = b;
            b = a;
            a = word_add(t1, t2);
        }
        state[0] = word_add(state[0], a);
        state[1] = word_add(state[1], b);
        state[2] = word_add(state[2], c);
        state[3] = word_add(state[3], d);
        state[4] = word_add(state[4], e);
        state[5] = word_add(state[5], f);
        state[6] = word_add(state[6], g);
        state[7] = word_add(state[7], h);
    }
    std::vector<Bit> out;
    out.reserve(256);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 32; ++j) out.push_back(state[i][j]);
    return out;
}

namespace {
constexpr uint16_t kToyIv = 0x9e37;
constexpr uint16_t kToyRound[3] = {0x5bd1, 0xa5a5, 0x3c6e};

inline uint16_t rotl16(uint16_t v, int n) {
    return static_cast<uint16_t>((v << n) | (v >> (16 - n)));
}
}  // namespace

uint16_t toy_hash(const BitVec& message_bits) {
    BitVec bits = message_bits;
    uint64_t len = bits.size();
    while (bits.size() % 16 != 0) bits.push_back(0);
    uint16_t h = kToyIv;
    auto mix = [&h]() {
        for (int r = 0; r < 3; ++r) {
            h = static_cast<uint16_t>(h + (rotl16(h, 5) ^ kToyRound[r]));
            h ^= rotl16(h, 9);
        }
    };
    for (size_t off = 0; off < bits.size(); off += 16) {
        uint16_t w = 0;
        for (int i = 0; i < 16; ++i) w = static_cast<uint16_t>((w << 1) | bits[off + i]);
        h ^= w;
        mix();
    }
    h ^= static_cast<uint16_t>(len);
    mix();
    return h;
}

std::vector<CircuitBuilder::Bit> CircuitBuilder::toy_hash_bits(const std::vector<Bit>& message) {
    std::vector<Bit> bits = message;
    uint64_t len = bits.size();
    while (bits.size() % 16 != 0) bits.push_back(Bit::zero());

    auto const16 = [](uint16_t v) {
        std::vector<Bit> w(16);
        for (int i = 0; i < 16; ++i) w[i] = ((v >> (15 - i)) & 1u) ? Bit::one() : Bit::zero();
        return w;
    };
    auto rot = [](const std::vector<Bit>& w, int n) {
        std::vector<Bit> out(16);
        for (int i = 0; i < 16; ++i) out[(i + 16 - n) % 16] = w[i];  // left rotate
        return out;
    };
    auto vxor = [this](const std::vector<Bit>& a, const std::vector<Bit>& b) {
        std::vector<Bit> out(16);
        for (int i = 0; i < 16; ++i) out[i] = bxor(a[i], b[i]);
        return out;
    };

    std::vector<Bit> h = const16(kToyIv);
    auto mix = [&]() {
        for (int r = 0; r < 3; ++r) {
            h = add_bits(*this, h, vxor(rot(h, 5), const16(kToyRound[r])));
            h = vxor(h, rot(h, 9));
        }
    };
    for (size_t off = 0; off < bits.size(); off += 16) {
        std::vector<Bit> w(bits.begin() + off, bits.begin() + off + 16);
        h = vxor(h, w);
        mix();
    }
    h = vxor(h, const16(static_cast<uint16_t>(len)));
    mix();
    return h;
}

CircuitBuilder::Bit CircuitBuilder::equal(const std::vector<Bit>& a, const std::vector<Bit>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("equal: width mismatch");
    std::vector<Bit> eq;
    eq.reserve(a.size());
    for (size_t i = 0; i < a.size(); ++i) eq.push_back(bnot(bxor(a[i], b[i])));
    // balanced AND reduction
    while (eq.size() > 1) {
        std::vector<Bit> next;
        for (size_t i = 0; i + 1 < eq.size(); i += 2) next.push_back(band(eq[i], eq[i + 1]));
        if (eq.size() % 2 == 1) next.push_back(eq.back());
        eq = std::move(next);
    }
    return eq.empty() ? Bit::one() : eq[0];
}

BooleanCircuit CircuitBuilder::finish(const std::vector<Bit>& output_bits) {
    BooleanCircuit c;
    c.input_count = input_count_;
    // Materialize constant outputs; needs at least one live wire to anchor.
    Bit const_zero;
    bool have_zero = false;
    std::vector<uint32_t> outs;
    for (Bit b : output_bits) {
        if (b.is_const()) {
            if (!have_zero) {
                if (input_count_ == 0)
                    throw std::logic_error("CircuitBuilder: constant output in input-free circuit");
                Bit w0{Bit::Kind::Wire, 0};
                const_zero = emit(GateOp::Xor, w0, w0);
                have_zero = true;
            }
            Bit out = b.const_value() ? bnot(const_zero) : const_zero;
            outs.push_back(out.wire);
        } else {
            outs.push_back(b.wire);
        }
    }
    c.wire_count = next_wire_;
    c.gates = gates_;
    c.outputs = std::move(outs);
    return c;
}

FiWidths toy_fi_widths() {
    FiWidths w;
    w.id_bits = 8;
    w.sig_bits = 8;
    w.tag_bits = 4;
    w.salt_bits = 8;
    w.nonce_bits = 8;
    w.digest_bits = 16;
    w.version = 0;
    return w;
}

namespace {

template <typename B>
std::vector<B> const_bits(uint32_t value, size_t nbits, B zero, B one) {
    std::vector<B> out(nbits);
    for (size_t i = 0; i < nbits; ++i) out[i] = ((value >> (nbits - 1 - i)) & 1u) ? one : zero;
    return out;
}

}  // namespace

BooleanCircuit build_fi_circuit(const FiWidths& w, bool toy_hash_variant) {
    if (!toy_hash_variant && w.digest_bits != 256)
        throw std::invalid_argument("build_fi_circuit: SHA variant requires 256-bit digests");
    CircuitBuilder bld;
    using Bit = CircuitBuilder::Bit;

    auto g = bld.inputs(w.digest_bits);
    auto r_star = bld.inputs(w.digest_bits);
    auto id = bld.inputs(w.id_bits);
    auto sig = bld.inputs(w.sig_bits);
    auto salt = bld.inputs(w.salt_bits);
    auto nonce = bld.inputs(w.nonce_bits);
    Bit puf_ok = bld.input();

    auto tag = const_bits<Bit>(kEnrollTagValue & ((1u << std::min<size_t>(w.tag_bits, 31)) - 1u),
                               w.tag_bits, Bit::zero(), Bit::one());

    std::vector<Bit> msg1;
    msg1.insert(msg1.end(), id.begin(), id.end());
    msg1.insert(msg1.end(), sig.begin(), sig.end());
    msg1.insert(msg1.end(), r_star.begin(), r_star.end());
    msg1.insert(msg1.end(), tag.begin(), tag.end());

    std::vector<Bit> g_prime =
        toy_hash_variant ? bld.toy_hash_bits(msg1)
                         : bld.sha256_bits(sha256_pad_bits<Bit>(msg1, Bit::zero(), Bit::one()));

    Bit b = bld.band(bld.equal(g_prime, g), puf_ok);

    std::vector<Bit> msg2 = g_prime;
    msg2.insert(msg2.end(), salt.begin(), salt.end());
    msg2.insert(msg2.end(), nonce.begin(), nonce.end());
    std::vector<Bit> token =
        toy_hash_variant ? bld.toy_hash_bits(msg2)
                         : bld.sha256_bits(sha256_pad_bits<Bit>(msg2, Bit::zero(), Bit::one()));

    std::vector<Bit> outputs;
    outputs.push_back(b);
    outputs.insert(outputs.end(), token.begin(), token.end());
    BooleanCircuit c = bld.finish(outputs);

    uint32_t wire = 0;
    auto take = [&wire](size_t n) {
        std::vector<uint32_t> v(n);
        for (size_t i = 0; i < n; ++i) v[i] = wire++;
        return v;
    };
    auto gw = take(2 * w.digest_bits);
    auto ew = take(w.id_bits + w.sig_bits);
    auto pw = take(w.salt_bits + w.nonce_bits + 1);
    c.garbler_inputs = gw;
    c.evaluator_inputs = ew;
    c.public_inputs = pw;
    return c;
}

BitVec fi_input_bits(const FiWidths& w, const FiInputs& in) {
    auto field = [](const Bytes& bytes, size_t nbits) {
        if (bytes.size() * 8 != nbits)
            throw std::invalid_argument("fi_input_bits: field width mismatch");
        return unpack_bits_msb(bytes, nbits);
    };
    BitVec bits;
    auto append = [&bits](const BitVec& v) { bits.insert(bits.end(), v.begin(), v.end()); };
    append(field(in.g, w.digest_bits));
    append(field(in.r_star, w.digest_bits));
    append(field(in.id, w.id_bits));
    append(field(in.sig, w.sig_bits));
    append(field(in.salt, w.salt_bits));
    append(field(in.nonce, w.nonce_bits));
    bits.push_back(in.puf_ok ? 1 : 0);
    return bits;
}

FiOutputs evaluate_fi_native(const FiWidths& w, const FiInputs& in, bool toy_hash_variant) {
    auto hash_bits = [&](const BitVec& msg) -> BitVec {
        if (toy_hash_variant) {
            uint16_t h = toy_hash(msg);
            BitVec out(16);
            for (int i = 0; i < 16; ++i) out[i] = (h >> (15 - i)) & 1u;
            return out;
        }
        // all byte-aligned in the SHA variant
        Digest256 d = sha256(pack_bits_msb(msg));
        return unpack_bits_msb(to_bytes(d), 256);
    };
    BitVec msg1;
    auto append_bytes = [&](BitVec& v, const Bytes& b, size_t n) {
        BitVec bits = unpack_bits_msb(b, n);
        v.insert(v.end(), bits.begin(), bits.end());
    };
    append_bytes(msg1, in.id, w.id_bits);
    append_bytes(msg1, in.sig, w.sig_bits);
    append_bytes(msg1, in.r_star, w.digest_bits);
    auto tag = const_bits<uint8_t>(kEnrollTagValue & ((1u << std::min<size_t>(w.tag_bits, 31)) - 1u),
                                   w.tag_bits, 0, 1);
    msg1.insert(msg1.end(), tag.begin(), tag.end());
    BitVec g_prime = hash_bits(msg1);

    FiOutputs out;
    out.b = in.puf_ok && g_prime == unpack_bits_msb(in.g, w.digest_bits);

    BitVec msg2 = g_prime;
    append_bytes(msg2, in.salt, w.salt_bits);
    append_bytes(msg2, in.nonce, w.nonce_bits);
    BitVec token_bits = hash_bits(msg2);
    out.token = pack_bits_msb(token_bits);
    return out;
}

std::string to_bristol(const BooleanCircuit& c) {
    std::ostringstream os;
    os << c.gates.size() << ' ' << c.wire_count << '\n';
    os << 3 << ' ' << c.garbler_inputs.size() << ' ' << c.evaluator_inputs.size() << ' '
       << c.public_inputs.size() << '\n';
    os << 1 << ' ' << c.outputs.size() << '\n';
    // Output wires are listed explicitly; they are not required to be the
    // final wires of the circuit.
    for (size_t i = 0; i < c.outputs.size(); ++i)
        os << c.outputs[i] << (i + 1 == c.outputs.size() ? '\n' : ' ');
    os << '\n';
    for (const auto& g : c.gates) {
        switch (g.op) {
            case GateOp::And: os << "2 1 " << g.a << ' ' << g.b << ' ' << g.out << " AND\n"; break;
            case GateOp::Xor: os << "2 1 " << g.a << ' ' << g.b << ' ' << g.out << " XOR\n"; break;
            case GateOp::Inv: os << "1 1 " << g.a << ' ' << g.out << " INV\n"; break;
        }
    }
    return os.str();
}

BooleanCircuit from_bristol(std::istream& in) {
    BooleanCircuit c;
    size_t ngates = 0;
    in >> ngates >> c.wire_count;
    size_t nin = 0;
    in >> nin;
    std::vector<size_t> in_sizes(nin);
    size_t total_in = 0;
    for (auto& s : in_sizes) {
        in >> s;
        total_in += s;
    }
    size_t nout = 0;
    in >> nout;
    size_t total_out = 0;
    for (size_t i = 0; i < nout; ++i) {
        size_t s;
        in >> s;
        total_out += s;
    }
    for (size_t i = 0; i < total_out; ++i) {
        uint32_t w;
        in >> w;
        c.outputs.push_back(w);
    }
    c.input_count = static_cast<uint32_t>(total_in);
    uint32_t wire = 0;
    if (nin >= 1)
        for (size_t i = 0; i < in_sizes[0]; ++i) c.garbler_inputs.push_back(wire++);
    if (nin >= 2)
        for (size_t i = 0; i < in_sizes[1]; ++i) c.evaluator_inputs.push_back(wire++);
    if (nin >= 3)
        for (size_t i = 0; i < in_sizes[2]; ++i) c.public_inputs.push_back(wire++);
    for (size_t i = 0; i < ngates; ++i) {
        size_t gin = 0, gout = 0;
        std::string op;
        in >> gin >> gout;
        Gate g;
        if (gin == 2) {
            in >> g.a >> g.b >> g.out >> op;
            if (op == "AND")
                g.op = GateOp::And;
            else if (op == "XOR")
                g.op = GateOp::Xor;
            else
                throw std::runtime_error("from_bristol: unsupported 2-input gate " + op);
        } else if (gin == 1) {
            in >> g.a >> g.out >> op;
            g.b = g.a;
            if (op == "INV" || op == "NOT")
                g.op = GateOp::Inv;
            else
                throw std::runtime_error("from_bristol: unsupported 1-input gate " + op);
        } else {
            throw std::runtime_error("from_bristol: unsupported fan-in");
        }
        c.gates.push_back(g);
    }
    if (!in) throw std::runtime_error("from_bristol: truncated circuit");
    return c;
}

}  // namespace meshauth
