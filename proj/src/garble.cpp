#include "meshauth/garble.hpp"

#include <stdexcept>

namespace meshauth {

namespace {

inline uint64_t rotr64(uint64_t v, int n) { return (v >> n) | (v << (64 - n)); }
inline uint64_t rotl64(uint64_t v, int n) { return (v << n) | (v >> (64 - n)); }

constexpr int kSpeckRounds = 32;

struct SpeckKey {
    uint64_t rk[kSpeckRounds];
};

SpeckKey make_fixed_key() {
    // Fixed public cipher key; security rests on the secrecy of the labels.
    uint64_t a = 0x0706050403020100ull;  // key word 0
    uint64_t b = 0x0f0e0d0c0b0a0908ull;  // key word 1
    SpeckKey k{};
    for (int i = 0; i < kSpeckRounds; ++i) {
        k.rk[i] = a;
        b = (rotr64(b, 8) + a) ^ static_cast<uint64_t>(i);
        a = rotl64(a, 3) ^ b;
    }
    return k;
}

const SpeckKey kFixedKey = make_fixed_key();

inline Label speck_encrypt(Label p) {
    uint64_t x = p.hi;
    uint64_t y = p.lo;
    for (int i = 0; i < kSpeckRounds; ++i) {
        x = (rotr64(x, 8) + y) ^ kFixedKey.rk[i];
        y = rotl64(y, 3) ^ x;
    }
    return {y, x};
}

inline Label zero_or(const Label& l, bool take) { return take ? l : Label{}; }

constexpr uint64_t kOutputTweakBase = 1ull << 63;

}  // namespace

Label gate_hash(const Label& x, uint64_t tweak) {
    Label in{x.lo ^ tweak, x.hi};
    Label e = speck_encrypt(in);
    return e ^ in;
}

Garbling garble(const BooleanCircuit& c, Rng& rng) {
    Garbling g;
    g.secrets.delta = {rng.next_u64() | 1u, rng.next_u64()};
    const Label& delta = g.secrets.delta;

    std::vector<Label> label0(c.wire_count);  // false label per wire
    g.secrets.input_labels.resize(c.input_count);
    for (uint32_t i = 0; i < c.input_count; ++i) {
        label0[i] = {rng.next_u64(), rng.next_u64()};
        g.secrets.input_labels[i] = {label0[i], label0[i] ^ delta};
    }

    g.tables.wire_count = c.wire_count;
    g.tables.gate_count = static_cast<uint32_t>(c.gates.size());
    g.tables.and_tables.reserve(c.and_count());

    uint64_t and_index = 0;
    for (const Gate& gate : c.gates) {
        switch (gate.op) {
            case GateOp::Xor:
                label0[gate.out] = label0[gate.a] ^ label0[gate.b];
                break;
            case GateOp::Inv:
                label0[gate.out] = label0[gate.a] ^ delta;
                break;
            case GateOp::And: {
                const Label a0 = label0[gate.a];
                const Label b0 = label0[gate.b];
                const bool pa = a0.color() != 0;
                const bool pb = b0.color() != 0;
                const uint64_t j = 2 * and_index;
                const uint64_t jp = 2 * and_index + 1;
                const Label ha0 = gate_hash(a0, j);
                const Label ha1 = gate_hash(a0 ^ delta, j);
                const Label hb0 = gate_hash(b0, jp);
                const Label hb1 = gate_hash(b0 ^ delta, jp);

                GarbledAnd t;
                t.tg = ha0 ^ ha1 ^ zero_or(delta, pb);  // generator half
                Label wg = ha0 ^ zero_or(t.tg, pa);
                t.te = hb0 ^ hb1 ^ a0;  // evaluator half
                Label we = hb0 ^ zero_or(t.te ^ a0, pb);
                label0[gate.out] = wg ^ we;
                g.tables.and_tables.push_back(t);
                ++and_index;
                break;
            }
        }
    }

    g.secrets.output_decode.resize(c.outputs.size());
    for (size_t i = 0; i < c.outputs.size(); ++i) {
        const Label l0 = label0[c.outputs[i]];
        const uint64_t t = kOutputTweakBase | i;
        g.secrets.output_decode[i] = {gate_hash(l0, t), gate_hash(l0 ^ delta, t)};
    }
    return g;
}

std::vector<Label> evaluate_garbled(const BooleanCircuit& c, const GarbledTables& tables,
                                    const std::vector<Label>& input_labels) {
    if (input_labels.size() != c.input_count)
        throw std::invalid_argument("evaluate_garbled: input label count mismatch");
    if (tables.and_tables.size() != c.and_count())
        throw std::invalid_argument("evaluate_garbled: table count mismatch");

    std::vector<Label> wires(c.wire_count);
    for (uint32_t i = 0; i < c.input_count; ++i) wires[i] = input_labels[i];

    uint64_t and_index = 0;
    for (const Gate& gate : c.gates) {
        switch (gate.op) {
            case GateOp::Xor:
                wires[gate.out] = wires[gate.a] ^ wires[gate.b];
                break;
            case GateOp::Inv:
                wires[gate.out] = wires[gate.a];  // semantics flipped garbler-side
                break;
            case GateOp::And: {
                const GarbledAnd& t = tables.and_tables[and_index];
                const Label& a = wires[gate.a];
                const Label& b = wires[gate.b];
                const bool sa = a.color() != 0;
                const bool sb = b.color() != 0;
                Label wg = gate_hash(a, 2 * and_index) ^ zero_or(t.tg, sa);
                Label we = gate_hash(b, 2 * and_index + 1) ^ zero_or(t.te ^ a, sb);
                wires[gate.out] = wg ^ we;
                ++and_index;
                break;
            }
        }
    }

    std::vector<Label> out;
    out.reserve(c.outputs.size());
    for (uint32_t w : c.outputs) out.push_back(wires[w]);
    return out;
}

BitVec decode_outputs(const BooleanCircuit& c, const GarblingSecrets& secrets,
                      const std::vector<Label>& output_labels) {
    if (output_labels.size() != c.outputs.size() ||
        secrets.output_decode.size() != c.outputs.size())
        throw std::invalid_argument("decode_outputs: output count mismatch");
    BitVec bits(output_labels.size());
    for (size_t i = 0; i < output_labels.size(); ++i) {
        const Label h = gate_hash(output_labels[i], kOutputTweakBase | i);
        if (h == secrets.output_decode[i][0])
            bits[i] = 0;
        else if (h == secrets.output_decode[i][1])
            bits[i] = 1;
        else
            throw UndecodableLabel();
    }
    return bits;
}

Bytes serialize_label(const Label& l) {
    Bytes b = u64_be(l.lo);
    Bytes hi = u64_be(l.hi);
    b.insert(b.end(), hi.begin(), hi.end());
    return b;
}

namespace {

uint64_t read_u64_be(const Bytes& b, size_t off) {
    uint64_t v = 0;
    for (size_t i = 0; i < 8; ++i) v = (v << 8) | b.at(off + i);
    return v;
}

uint32_t read_u32_be(const Bytes& b, size_t off) {
    uint32_t v = 0;
    for (size_t i = 0; i < 4; ++i) v = (v << 8) | b.at(off + i);
    return v;
}

constexpr uint32_t kTablesMagic = 0x4d475431u;  // "MGT1"

}  // namespace

Label deserialize_label(const Bytes& b, size_t offset) {
    return {read_u64_be(b, offset), read_u64_be(b, offset + 8)};
}

Bytes serialize_tables(const GarbledTables& t) {
    Bytes out;
    auto put32 = [&](uint32_t v) {
        Bytes b = u32_be(v);
        out.insert(out.end(), b.begin(), b.end());
    };
    auto put_label = [&](const Label& l) {
        Bytes b = serialize_label(l);
        out.insert(out.end(), b.begin(), b.end());
    };
    put32(kTablesMagic);
    put32(t.version);
    put32(t.wire_count);
    put32(t.gate_count);
    put32(static_cast<uint32_t>(t.and_tables.size()));
    for (const auto& g : t.and_tables) {
        put_label(g.tg);
        put_label(g.te);
    }
    return out;
}

GarbledTables deserialize_tables(const Bytes& b) {
    if (b.size() < 20) throw std::invalid_argument("deserialize_tables: truncated header");
    if (read_u32_be(b, 0) != kTablesMagic)
        throw std::invalid_argument("deserialize_tables: bad magic");
    GarbledTables t;
    t.version = read_u32_be(b, 4);
    if (t.version != 1) throw std::invalid_argument("deserialize_tables: unsupported version");
    t.wire_count = read_u32_be(b, 8);
    t.gate_count = read_u32_be(b, 12);
    uint32_t n = read_u32_be(b, 16);
    if (b.size() != 20 + static_cast<size_t>(n) * 32)
        throw std::invalid_argument("deserialize_tables: size mismatch");
    t.and_tables.resize(n);
    for (uint32_t i = 0; i < n; ++i) {
        t.and_tables[i].tg = deserialize_label(b, 20 + static_cast<size_t>(i) * 32);
        t.and_tables[i].te = deserialize_label(b, 20 + static_cast<size_t>(i) * 32 + 16);
    }
    return t;
}

}  // namespace meshauth
