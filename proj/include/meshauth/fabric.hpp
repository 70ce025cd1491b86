#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshauth/bits.hpp"
#include "meshauth/mesh.hpp"
#include "meshauth/puf.hpp"
#include "meshauth/router.hpp"
#include "meshauth/sha256.hpp"

namespace meshauth {

// Per-element physical delay parameters of one device's mesh fabric.
// site_delay is the static (challenge-independent) mismatch of a tile or
// link; site_gain modulates the challenge-dependent component. Both are
// N(0,1) draws keyed by (device seed, element id).
double site_delay(const DeviceModel& dev, uint32_t element);
double site_gain(const DeviceModel& dev, uint32_t element);

// Differential path delay margin for a wrapped challenge:
// margin = delay(path_b) - delay(path_a); the race bit is 1 iff A arrives
// first (margin > 0). Swapping the paths negates the margin.
double race_margin(const DeviceModel& dev, const PathPair& pair, const BitVec& wrapped);

// Noise-free race on the raw challenge (wrapped internally by cfg).
uint8_t race(const DeviceModel& dev, const RouterConfig& cfg, const PathPair& pair,
             const BitVec& challenge);

// Arbiter timing jitter std dev used for noisy races; scales with the
// device's flip probability so eps = 0 stays exactly deterministic. The
// factor is calibrated so default enrollment retention lands in the
// 60-80% stability band.
double race_noise_sigma(const DeviceModel& dev, const PathPair& pair);

uint8_t race_noisy(const DeviceModel& dev, const RouterConfig& cfg, const PathPair& pair,
                   const BitVec& challenge, Rng& rng);

VoteResult race_vote(const DeviceModel& dev, const RouterConfig& cfg, const PathPair& pair,
                     const BitVec& challenge, size_t repetitions, Rng& rng);

struct RouteDigest {
    BitVec stable_bits;   // exactly digest_bits entries
    Digest256 digest;     // SHA-256 over the canonical serialization
    size_t candidate_count = 0;
    size_t stable_count = 0;
    double retention = 0.0;
};

// Canonical serialization for hashing: 32-bit big-endian bit count, then
// the bits packed big-endian.
Bytes serialize_stable_bits(const BitVec& bits);

// Races every candidate with majority voting, stability-filters at tau, and
// hashes the first digest_bits surviving bits. Raw per-candidate responses
// stay inside this call; only the digest and counts are returned.
RouteDigest build_route_digest(const DeviceModel& dev, const RouterConfig& cfg,
                               const std::vector<PathPair>& pairs,
                               const std::vector<BitVec>& challenges, size_t repetitions,
                               double tau, Rng& rng, size_t digest_bits = 256);

// 32-bit diffusion combiner: each window is avalanched and emitted as +-1
// symbols. Final window is zero-padded; callers keep the original length.
std::vector<int8_t> response_combine(const BitVec& stable_bits, size_t window = 32);

uint32_t diffuse32(uint32_t word);

std::string digest_report_json(const std::string& device_id, const RouteDigest& rd);

}  // namespace meshauth
