#include "meshauth/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace meshauth {

namespace {

MeanStd aggregate(const std::vector<double>& xs) {
    MeanStd m;
    if (xs.empty()) return m;
    double sum = 0.0;
    for (double x : xs) sum += x;
    m.mean = sum / xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - m.mean) * (x - m.mean);
    m.std = xs.size() > 1 ? std::sqrt(var / xs.size()) : 0.0;
    return m;
}

double ones_fraction(const BitVec& bits) {
    if (bits.empty()) throw std::invalid_argument("metrics: empty response vector");
    size_t ones = 0;
    for (uint8_t b : bits) ones += b;
    return static_cast<double>(ones) / bits.size();
}

double frac_hd(const BitVec& a, const BitVec& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("metrics: response vector mismatch");
    size_t d = 0;
    for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return static_cast<double>(d) / a.size();
}

}  // namespace

MeanStd uniformity(const std::vector<BitVec>& per_device_responses) {
    if (per_device_responses.empty()) throw std::invalid_argument("uniformity: no devices");
    std::vector<double> fr;
    for (const auto& r : per_device_responses) fr.push_back(ones_fraction(r));
    return aggregate(fr);
}

MeanStd bias(const std::vector<BitVec>& per_device_responses) {
    if (per_device_responses.empty()) throw std::invalid_argument("bias: no devices");
    std::vector<double> fr;
    for (const auto& r : per_device_responses) fr.push_back(std::abs(ones_fraction(r) - 0.5));
    return aggregate(fr);
}

MeanStd uniqueness(const std::vector<BitVec>& per_device_responses) {
    if (per_device_responses.size() < 2)
        throw std::invalid_argument("uniqueness: needs at least two devices");
    std::vector<double> hds;
    for (size_t i = 0; i < per_device_responses.size(); ++i)
        for (size_t j = i + 1; j < per_device_responses.size(); ++j)
            hds.push_back(frac_hd(per_device_responses[i], per_device_responses[j]));
    return aggregate(hds);
}

ReliabilityResult reliability_and_intra_hd(const std::vector<BitVec>& reads) {
    if (reads.size() < 2) throw std::invalid_argument("reliability: needs at least two reads");
    const size_t n = reads[0].size();
    BitVec reference(n);
    for (size_t i = 0; i < n; ++i) {
        size_t ones = 0;
        for (const auto& r : reads) {
            if (r.size() != n) throw std::invalid_argument("reliability: read length mismatch");
            ones += r[i];
        }
        reference[i] = ones * 2 > reads.size() ? 1 : 0;
    }
    std::vector<double> hds;
    for (const auto& r : reads) hds.push_back(frac_hd(r, reference));
    ReliabilityResult out;
    out.intra_hd = aggregate(hds);
    out.reliability = 1.0 - out.intra_hd.mean;
    return out;
}

double bit_aliasing(const std::vector<BitVec>& per_device_responses) {
    if (per_device_responses.empty()) throw std::invalid_argument("bit_aliasing: no devices");
    const size_t n = per_device_responses[0].size();
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        size_t ones = 0;
        for (const auto& r : per_device_responses) {
            if (r.size() != n) throw std::invalid_argument("bit_aliasing: length mismatch");
            ones += r[i];
        }
        sum += static_cast<double>(ones) / per_device_responses.size();
    }
    return sum / n;
}

double bit_flip_sensitivity(const DeviceModel& dev, const std::vector<BitVec>& challenges,
                            Rng& rng) {
    if (challenges.empty()) throw std::invalid_argument("bit_flip_sensitivity: no challenges");
    size_t flips = 0;
    for (const auto& ch : challenges) {
        auto feats = lift_features(phi_map(ch), dev.tap_pairs());
        uint8_t base = evaluate_noisefree(dev, feats);
        BitVec mod = ch;
        size_t pos = rng.next_below(ch.size());
        mod[pos] ^= 1u;
        auto feats2 = lift_features(phi_map(mod), dev.tap_pairs());
        flips += evaluate_noisefree(dev, feats2) != base;
    }
    return static_cast<double>(flips) / challenges.size();
}

TokenHdResult token_hd_distribution(const std::vector<Bytes>& tokens, size_t bins) {
    if (tokens.size() < 2) throw std::invalid_argument("token_hd: needs at least two tokens");
    TokenHdResult out;
    out.histogram.assign(bins, 0);
    double sum = 0.0;
    for (size_t i = 0; i < tokens.size(); ++i) {
        for (size_t j = i + 1; j < tokens.size(); ++j) {
            double hd = static_cast<double>(hamming_distance(tokens[i], tokens[j])) /
                        (tokens[i].size() * 8);
            sum += hd;
            size_t bin = std::min(bins - 1, static_cast<size_t>(hd * bins));
            ++out.histogram[bin];
            ++out.pair_count;
        }
    }
    out.mean = sum / out.pair_count;
    return out;
}

MetricsReport compute_metrics(const std::vector<DeviceModel>& devices, size_t challenge_count,
                              size_t repetitions, uint64_t seed) {
    if (devices.empty()) throw std::invalid_argument("compute_metrics: no devices");
    const size_t n = devices[0].n_stages();
    Rng ch_rng(seed, 0xc4a11e);
    std::vector<BitVec> challenges;
    challenges.reserve(challenge_count);
    for (size_t i = 0; i < challenge_count; ++i) challenges.push_back(random_challenge(n, ch_rng));

    // Majority-voted raw bits per device over a shared challenge order.
    std::vector<BitVec> voted(devices.size());
    for (size_t d = 0; d < devices.size(); ++d) {
        Rng noise = Rng(seed, 0xd0 + d);
        voted[d].reserve(challenge_count);
        for (const auto& ch : challenges) {
            auto feats = lift_features(phi_map(ch), devices[d].tap_pairs());
            voted[d].push_back(majority_vote(devices[d], feats, repetitions, noise).bit);
        }
    }

    MetricsReport r;
    r.devices = devices.size();
    r.challenges = challenge_count;
    r.repetitions = repetitions;
    r.uniformity = uniformity(voted);
    r.bias = bias(voted);
    r.uniqueness = uniqueness(voted);
    r.bit_aliasing = bit_aliasing(voted);

    // Reliability: repeated single-read vectors per device against majority.
    std::vector<double> rel, ihd_mean;
    for (size_t d = 0; d < devices.size(); ++d) {
        Rng noise = Rng(seed, 0x1e11ab + d);
        std::vector<BitVec> reads(repetitions);
        for (auto& read : reads) {
            read.reserve(challenge_count);
            for (const auto& ch : challenges) {
                auto feats = lift_features(phi_map(ch), devices[d].tap_pairs());
                read.push_back(evaluate_noisy(devices[d], feats, noise));
            }
        }
        ReliabilityResult rr = reliability_and_intra_hd(reads);
        rel.push_back(rr.reliability);
        ihd_mean.push_back(rr.intra_hd.mean);
    }
    r.reliability = aggregate(rel).mean;
    r.intra_hd = aggregate(ihd_mean);

    Rng flip_rng(seed, 0xf11b);
    std::vector<double> sens;
    for (const auto& dev : devices) sens.push_back(bit_flip_sensitivity(dev, challenges, flip_rng));
    r.bit_flip_sensitivity = aggregate(sens).mean;
    return r;
}

std::string metrics_report_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["uniformity"] = {{"mean", r.uniformity.mean}, {"std", r.uniformity.std}};
    j["bias"] = {{"mean", r.bias.mean}, {"std", r.bias.std}};
    j["uniqueness_hd"] = {{"mean", r.uniqueness.mean}, {"std", r.uniqueness.std}};
    j["reliability"] = r.reliability;
    j["intra_chip_hd"] = {{"mean", r.intra_hd.mean}, {"std", r.intra_hd.std}};
    j["bit_aliasing"] = r.bit_aliasing;
    j["bit_flip_sensitivity"] = r.bit_flip_sensitivity;
    j["devices"] = r.devices;
    j["challenges"] = r.challenges;
    j["repetitions"] = r.repetitions;
    return j.dump(2);
}

std::string token_hd_json(const TokenHdResult& r) {
    nlohmann::ordered_json j;
    j["mean"] = r.mean;
    j["pair_count"] = r.pair_count;
    j["histogram"] = r.histogram;
    return j.dump(2);
}

}  // namespace meshauth
