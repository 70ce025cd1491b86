#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "meshauth/bits.hpp"
#include "meshauth/circuit.hpp"
#include "meshauth/rng.hpp"

namespace meshauth {

// 128-bit wire label.
struct Label {
    uint64_t lo = 0;
    uint64_t hi = 0;

    Label operator^(const Label& o) const { return {lo ^ o.lo, hi ^ o.hi}; }
    Label& operator^=(const Label& o) {
        lo ^= o.lo;
        hi ^= o.hi;
        return *this;
    }
    bool operator==(const Label& o) const { return lo == o.lo && hi == o.hi; }
    uint8_t color() const { return static_cast<uint8_t>(lo & 1u); }  // point-and-permute bit
};

// Fixed-key tweakable correlation-robust hash for gate rows, Davies-Meyer
// over Speck-128/128: H(x, t) = E(x ^ t) ^ x ^ t.
Label gate_hash(const Label& x, uint64_t tweak);

// Two ciphertexts per AND gate (generator and evaluator half), XOR free.
struct GarbledAnd {
    Label tg;
    Label te;
};

struct GarbledTables {
    uint32_t version = 1;
    uint32_t wire_count = 0;
    uint32_t gate_count = 0;
    std::vector<GarbledAnd> and_tables;  // in AND-gate order
};

// Garbler-private material produced alongside the tables.
struct GarblingSecrets {
    Label delta;  // global free-XOR offset, color bit 1
    std::vector<std::array<Label, 2>> input_labels;   // per input wire
    std::vector<std::array<Label, 2>> output_decode;  // H(label_b, out tweak) per output
};

struct Garbling {
    GarbledTables tables;
    GarblingSecrets secrets;
};

Garbling garble(const BooleanCircuit& c, Rng& rng);

// Runs the evaluator pass: one label per input wire, in wire order.
std::vector<Label> evaluate_garbled(const BooleanCircuit& c, const GarbledTables& tables,
                                    const std::vector<Label>& input_labels);

struct UndecodableLabel : std::runtime_error {
    UndecodableLabel() : std::runtime_error("garbled output label decodes to neither value") {}
};

// Garbler-side decode; throws UndecodableLabel on corrupted outputs.
BitVec decode_outputs(const BooleanCircuit& c, const GarblingSecrets& secrets,
                      const std::vector<Label>& output_labels);

Bytes serialize_label(const Label& l);
Label deserialize_label(const Bytes& b, size_t offset);

// Byte-exact, versioned serialization of the garbled tables (the bulk of
// the 2PC transcript; used for the size accounting as well).
Bytes serialize_tables(const GarbledTables& t);
GarbledTables deserialize_tables(const Bytes& b);

}  // namespace meshauth
