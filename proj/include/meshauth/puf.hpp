#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "meshauth/bits.hpp"
#include "meshauth/rng.hpp"

namespace meshauth {

// Additive arbiter delay model: K parallel chains, XOR-combined, with lifted
// feed-forward tap features and a flat per-evaluation flip probability for
// PVT noise. Immutable after construction; safe to share across threads.
class DeviceModel {
public:
    // Weights are N(0,1), drawn from a stream derived from (seed, chain index),
    // so the same seed reproduces the same device bit-for-bit.
    DeviceModel(std::string device_id, uint64_t seed, size_t k_chains, size_t n_stages,
                double noise_eps, size_t tap_pair_count = 4);

    const std::string& device_id() const { return device_id_; }
    uint64_t seed() const { return seed_; }
    size_t k_chains() const { return k_chains_; }
    size_t n_stages() const { return n_stages_; }
    double noise_eps() const { return noise_eps_; }
    const std::vector<std::vector<double>>& weights() const { return weights_; }
    const std::vector<std::pair<size_t, size_t>>& tap_pairs() const { return tap_pairs_; }

    // Test hook for the XOR-symmetry property; returns a copy with one chain negated.
    DeviceModel with_negated_chain(size_t chain) const;

private:
    std::string device_id_;
    uint64_t seed_;
    size_t k_chains_;
    size_t n_stages_;
    double noise_eps_;
    std::vector<std::vector<double>> weights_;  // k_chains x (n_stages + 1 + tap_pairs)
    std::vector<std::pair<size_t, size_t>> tap_pairs_;
};

inline DeviceModel instantiate_device(uint64_t seed, size_t k_chains, size_t n_stages,
                                      double noise_eps, const std::string& device_id = "") {
    return DeviceModel(device_id.empty() ? "dev-" + std::to_string(seed) : device_id, seed,
                       k_chains, n_stages, noise_eps);
}

// Standard arbiter parity transform: feature i is the product over j >= i of
// (1 - 2*bit_j), plus a trailing constant 1. Output length n + 1.
std::vector<double> phi_map(const BitVec& raw_bits);

// Pairwise tap products appended to the phi features.
std::vector<double> lift_features(const std::vector<double>& phi,
                                  const std::vector<std::pair<size_t, size_t>>& tap_pairs);

// XOR of per-chain sign bits; sign(0) resolves to +1 (bit 0).
uint8_t evaluate_noisefree(const DeviceModel& dev, const std::vector<double>& features);

// Plain single-chain evaluation (oracle mode / race building block).
uint8_t evaluate_chain(const DeviceModel& dev, size_t chain, const std::vector<double>& features);
double chain_margin(const DeviceModel& dev, size_t chain, const std::vector<double>& features);

uint8_t evaluate_noisy(const DeviceModel& dev, const std::vector<double>& features, Rng& rng);

struct VoteResult {
    uint8_t bit;
    double flip_rate;  // minority votes / R
    std::vector<uint8_t> votes;
};

// Majority over R noisy evaluations; R must be odd.
VoteResult majority_vote(const DeviceModel& dev, const std::vector<double>& features, size_t repetitions,
                         Rng& rng);

struct ChallengeRecord {
    BitVec raw_bits;
    uint8_t response = 0;
    size_t repetitions = 0;
    double flip_rate = 0.0;
    bool stable = false;
};

struct FilterResult {
    std::vector<ChallengeRecord> retained;
    double retention = 0.0;
};

// Keeps records with flip_rate <= tau, preserving input order.
FilterResult stability_filter(const std::vector<ChallengeRecord>& records, double tau);

// CRP dump: CSV with header (device_id,challenge_hex,response_bit,flip_rate,stable),
// challenge serialized MSB-first.
std::string crp_csv(const std::string& device_id, const std::vector<ChallengeRecord>& records);

BitVec random_challenge(size_t n, Rng& rng);

}  // namespace meshauth
