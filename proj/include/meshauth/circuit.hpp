#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "meshauth/bits.hpp"
#include "meshauth/sha256.hpp"

namespace meshauth {

enum class GateOp : uint8_t { And, Xor, Inv };

struct Gate {
    GateOp op;
    uint32_t a = 0;
    uint32_t b = 0;  // unused for Inv
    uint32_t out = 0;
};

// Fan-in-2 boolean circuit in topological gate order. Input wires occupy
// [0, input_count); every other wire is driven by exactly one gate.
struct BooleanCircuit {
    uint32_t wire_count = 0;
    uint32_t input_count = 0;
    std::vector<Gate> gates;
    std::vector<uint32_t> garbler_inputs;    // MSB-first per field
    std::vector<uint32_t> evaluator_inputs;  // obtained via OT
    std::vector<uint32_t> public_inputs;     // encoded by both parties
    std::vector<uint32_t> outputs;

    size_t and_count() const;
};

// Plaintext evaluation; `inputs` indexed by wire id over [0, input_count).
BitVec evaluate_plain(const BooleanCircuit& c, const BitVec& inputs);

// Gate-level builder with constant folding. Wires carry either a known
// constant or a live wire id, so padding bits and fixed IVs cost nothing.
class CircuitBuilder {
public:
    struct Bit {
        enum class Kind : uint8_t { Zero, One, Wire } kind = Kind::Zero;
        uint32_t wire = 0;
        static Bit zero() { return {}; }
        static Bit one() { return {Kind::One, 0}; }
        bool is_const() const { return kind != Kind::Wire; }
        bool const_value() const { return kind == Kind::One; }
    };

    Bit input();
    std::vector<Bit> inputs(size_t n);

    Bit band(Bit x, Bit y);
    Bit bxor(Bit x, Bit y);
    Bit bnot(Bit x);
    Bit bor(Bit x, Bit y) { return bnot(band(bnot(x), bnot(y))); }

    // 32-bit word ops, bit 0 = MSB. Rotations/shifts are free rewires.
    using Word = std::array<Bit, 32>;
    Word word_const(uint32_t v);
    Word word_xor(const Word& a, const Word& b);
    Word word_and(const Word& a, const Word& b);
    Word word_not(const Word& a);
    Word word_rotr(const Word& a, int n);
    Word word_shr(const Word& a, int n);
    Word word_add(const Word& a, const Word& b);  // mod 2^32, ripple carry

    // One-block-at-a-time SHA-256 over an already padded bit sequence
    // (MSB-first, length a multiple of 512). Returns the 256 digest bits.
    std::vector<Bit> sha256_bits(const std::vector<Bit>& padded_message);

    // 16-bit ARX toy hash (see toy_hash) for exhaustive small-instance tests.
    std::vector<Bit> toy_hash_bits(const std::vector<Bit>& message);

    Bit equal(const std::vector<Bit>& a, const std::vector<Bit>& b);

    // Finalizes the circuit; constants among the requested outputs are
    // materialized with real gates so every output has a wire.
    BooleanCircuit finish(const std::vector<Bit>& output_bits);

    uint32_t next_wire() const { return next_wire_; }

private:
    Bit emit(GateOp op, Bit x, Bit y);
    uint32_t next_wire_ = 0;
    uint32_t input_count_ = 0;
    bool inputs_closed_ = false;
    std::vector<Gate> gates_;
};

// Native counterpart of CircuitBuilder::toy_hash_bits: a 16-bit ARX
// sponge used only by reduced test instances.
uint16_t toy_hash(const BitVec& message_bits);

// SHA-256 padding for an exact bit-length message (always whole bytes here).
template <typename BitT>
std::vector<BitT> sha256_pad_bits(std::vector<BitT> bits, BitT zero, BitT one) {
    uint64_t len = bits.size();
    bits.push_back(one);
    while (bits.size() % 512 != 448) bits.push_back(zero);
    for (int i = 63; i >= 0; --i) bits.push_back((len >> i) & 1 ? one : zero);
    return bits;
}

// Field widths of the authentication circuit f. Versioned constants: the
// layout is chosen so both SHA-256 preimages fit a single compression
// block, keeping the garbled circuit within the on-package budget.
struct FiWidths {
    size_t id_bits = 64;
    size_t sig_bits = 96;
    size_t tag_bits = 24;
    size_t salt_bits = 128;
    size_t nonce_bits = 56;
    size_t digest_bits = 256;
    uint32_t version = 2;

    size_t garbler_bits() const { return 2 * digest_bits; }         // G, R*
    size_t evaluator_bits() const { return id_bits + sig_bits; }    // ID, SIG
    size_t public_bits() const { return salt_bits + nonce_bits + 1; }  // s, nonce, PUF_OK
};

// Reduced instance for exhaustive equivalence checks; uses the toy hash.
FiWidths toy_fi_widths();

inline constexpr uint32_t kEnrollTagValue = 0x00A20001u;  // low tag_bits used

// The fixed authentication circuit:
//   G' = H(ID || SIG || R* || EnrollTag)
//   b  = (G' == G) AND PUF_OK
//   T' = H(G' || s || Nonce)
// Outputs: wire 0 = b, then the digest bits of T'.
// Input wire order: garbler (G, R*), evaluator (ID, SIG), public (s, Nonce, PUF_OK).
BooleanCircuit build_fi_circuit(const FiWidths& w, bool toy_hash_variant = false);

// Native (non-circuit) evaluation of f for the oracle side of tests and
// for the garbler's expected values.
struct FiInputs {
    Bytes g;      // digest_bits/8 bytes
    Bytes r_star;
    Bytes id;
    Bytes sig;
    Bytes salt;
    Bytes nonce;
    bool puf_ok = true;
};

struct FiOutputs {
    bool b = false;
    Bytes token;  // digest_bits/8 bytes
};

FiOutputs evaluate_fi_native(const FiWidths& w, const FiInputs& in, bool toy_hash_variant = false);

// Packs FiInputs into the circuit's input bit order.
BitVec fi_input_bits(const FiWidths& w, const FiInputs& in);

// Bristol-fashion circuit text format (one gate per line, XOR/AND/INV).
std::string to_bristol(const BooleanCircuit& c);
BooleanCircuit from_bristol(std::istream& in);

}  // namespace meshauth
