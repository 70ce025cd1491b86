#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshauth/bits.hpp"
#include "meshauth/puf.hpp"

namespace meshauth {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

// Fraction of ones per device, aggregated across devices.
MeanStd uniformity(const std::vector<BitVec>& per_device_responses);
// |fraction of ones - 0.5| per device, aggregated likewise.
MeanStd bias(const std::vector<BitVec>& per_device_responses);

// Mean fractional pairwise Hamming distance between device response vectors
// over an identical challenge order. Needs at least two devices.
MeanStd uniqueness(const std::vector<BitVec>& per_device_responses);

struct ReliabilityResult {
    double reliability = 0.0;  // mean agreement of reads with the majority reference
    MeanStd intra_hd;          // fractional HD of each read against the reference
};

// Repeated-read agreement for one device: reads are full response vectors
// over the same challenges; the reference is their bitwise majority.
ReliabilityResult reliability_and_intra_hd(const std::vector<BitVec>& reads);

// Mean over bit positions of the fraction of devices producing a one.
double bit_aliasing(const std::vector<BitVec>& per_device_responses);

// Probability that flipping one random challenge bit flips the noise-free
// response, averaged over the challenge set.
double bit_flip_sensitivity(const DeviceModel& dev, const std::vector<BitVec>& challenges,
                            Rng& rng);

struct TokenHdResult {
    std::vector<size_t> histogram;  // fractional HD binned over [0, 1]
    double mean = 0.0;
    size_t pair_count = 0;
};

// Pairwise fractional Hamming distance over session tokens.
TokenHdResult token_hd_distribution(const std::vector<Bytes>& tokens, size_t bins = 20);

// Full pre-tokenization metric sweep over a fleet of devices sharing one
// challenge set; responses are majority-voted raw bits, never combiner
// symbols.
struct MetricsReport {
    MeanStd uniformity;
    MeanStd bias;
    MeanStd uniqueness;
    double reliability = 0.0;
    MeanStd intra_hd;
    double bit_aliasing = 0.0;
    double bit_flip_sensitivity = 0.0;
    size_t devices = 0;
    size_t challenges = 0;
    size_t repetitions = 0;
};

MetricsReport compute_metrics(const std::vector<DeviceModel>& devices, size_t challenge_count,
                              size_t repetitions, uint64_t seed);

std::string metrics_report_json(const MetricsReport& r);
std::string token_hd_json(const TokenHdResult& r);

}  // namespace meshauth
