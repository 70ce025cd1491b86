#pragma once

#include <cstdint>
#include <vector>

#include "meshauth/bits.hpp"
#include "meshauth/gf2.hpp"
#include "meshauth/rng.hpp"

namespace meshauth {

// Challenge transform induced by one router configuration: a sparse invertible
// GF(2) mixing matrix, sparse polarity flips, and a stage permutation, all
// deterministic functions of config_id. Immutable after construction.
class RouterConfig {
public:
    RouterConfig(uint64_t config_id, size_t n);

    uint64_t config_id() const { return config_id_; }
    size_t width() const { return n_; }
    const std::vector<size_t>& permutation() const { return permutation_; }
    const BitVec& polarity_mask() const { return polarity_; }
    const Gf2Matrix& mixing_matrix() const { return mixing_; }

    // mixing, then polarity flips, then permutation
    BitVec wrap_challenge(const BitVec& raw) const;
    BitVec unwrap_challenge(const BitVec& wrapped) const;

private:
    uint64_t config_id_;
    size_t n_;
    std::vector<size_t> permutation_;
    std::vector<size_t> inverse_permutation_;
    BitVec polarity_;
    Gf2Matrix mixing_;
    Gf2Matrix mixing_inv_;
};

// Entropy-preserving input hashing layer: an invertible GF(2) matrix applied
// to the external challenge before it reaches the stage basis.
class InputHash {
public:
    explicit InputHash(Gf2Matrix h);
    static InputHash random(size_t n, uint64_t seed);

    size_t width() const { return h_.size(); }
    BitVec apply(const BitVec& challenge) const { return h_.mul_vec(challenge); }
    BitVec invert(const BitVec& hashed) const { return h_inv_.mul_vec(hashed); }
    const Gf2Matrix& matrix() const { return h_; }

private:
    Gf2Matrix h_;
    Gf2Matrix h_inv_;
};

}  // namespace meshauth
