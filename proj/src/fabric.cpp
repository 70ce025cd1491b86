#include "meshauth/fabric.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace meshauth {

namespace {
constexpr uint64_t kSiteDelayStream = 0x5d31a7e0u;
constexpr uint64_t kSiteGainStream = 0x6a11ce42u;
// Jitter scale per unit flip probability, in units of the margin's
// per-element dispersion. Calibrated so race retention at the default
// (eps=0.02, R=5, tau=0.2) lands inside the 60-80% band.
constexpr double kRaceJitterFactor = 45.0;
}  // namespace

double site_delay(const DeviceModel& dev, uint32_t element) {
    Rng rng(dev.seed() ^ kSiteDelayStream, element);
    return rng.next_gaussian();
}

double site_gain(const DeviceModel& dev, uint32_t element) {
    Rng rng(dev.seed() ^ kSiteGainStream, element);
    return rng.next_gaussian();
}

double race_margin(const DeviceModel& dev, const PathPair& pair, const BitVec& wrapped) {
    if (wrapped.size() != pair.stage_depth())
        throw std::invalid_argument("race_margin: challenge length must equal stage depth");
    std::vector<double> phi = phi_map(wrapped);
    double delay_a = 0.0, delay_b = 0.0;
    for (size_t i = 0; i < pair.path_a.size(); ++i)
        delay_a += site_delay(dev, pair.path_a[i]) + site_gain(dev, pair.path_a[i]) * phi[i];
    for (size_t i = 0; i < pair.path_b.size(); ++i)
        delay_b += site_delay(dev, pair.path_b[i]) + site_gain(dev, pair.path_b[i]) * phi[i];
    return delay_b - delay_a;
}

// The router wraps the fixed-width external challenge; the race consumes
// the first stage_depth wrapped bits (paths differ in length across pairs).
static BitVec wrap_for_pair(const RouterConfig& cfg, const PathPair& pair,
                            const BitVec& challenge) {
    BitVec wrapped = cfg.wrap_challenge(challenge);
    if (wrapped.size() < pair.stage_depth())
        throw std::invalid_argument("race: router width below path stage depth");
    wrapped.resize(pair.stage_depth());
    return wrapped;
}

uint8_t race(const DeviceModel& dev, const RouterConfig& cfg, const PathPair& pair,
             const BitVec& challenge) {
    return race_margin(dev, pair, wrap_for_pair(cfg, pair, challenge)) > 0.0 ? 1 : 0;
}

double race_noise_sigma(const DeviceModel& dev, const PathPair& pair) {
    return dev.noise_eps() * kRaceJitterFactor * std::sqrt(static_cast<double>(pair.stage_depth()));
}

uint8_t race_noisy(const DeviceModel& dev, const RouterConfig& cfg, const PathPair& pair,
                   const BitVec& challenge, Rng& rng) {
    double margin = race_margin(dev, pair, wrap_for_pair(cfg, pair, challenge));
    double sigma = race_noise_sigma(dev, pair);
    if (sigma > 0.0) margin += sigma * rng.next_gaussian();
    return margin > 0.0 ? 1 : 0;
}

VoteResult race_vote(const DeviceModel& dev, const RouterConfig& cfg, const PathPair& pair,
                     const BitVec& challenge, size_t repetitions, Rng& rng) {
    if (repetitions == 0 || repetitions % 2 == 0)
        throw std::invalid_argument("race_vote: repetitions must be odd");
    double margin = race_margin(dev, pair, wrap_for_pair(cfg, pair, challenge));
    double sigma = race_noise_sigma(dev, pair);
    VoteResult res;
    res.votes.reserve(repetitions);
    size_t ones = 0;
    for (size_t r = 0; r < repetitions; ++r) {
        double m = margin;
        if (sigma > 0.0) m += sigma * rng.next_gaussian();
        uint8_t v = m > 0.0 ? 1 : 0;
        res.votes.push_back(v);
        ones += v;
    }
    size_t zeros = repetitions - ones;
    res.bit = ones > zeros ? 1 : 0;
    res.flip_rate = static_cast<double>(std::min(ones, zeros)) / static_cast<double>(repetitions);
    return res;
}

Bytes serialize_stable_bits(const BitVec& bits) {
    Bytes out = u32_be(static_cast<uint32_t>(bits.size()));
    Bytes packed = pack_bits_msb(bits);
    out.insert(out.end(), packed.begin(), packed.end());
    return out;
}

RouteDigest build_route_digest(const DeviceModel& dev, const RouterConfig& cfg,
                               const std::vector<PathPair>& pairs,
                               const std::vector<BitVec>& challenges, size_t repetitions,
                               double tau, Rng& rng, size_t digest_bits) {
    if (challenges.size() != pairs.size())
        throw std::invalid_argument("build_route_digest: one challenge per candidate required");
    RouteDigest rd;
    rd.candidate_count = pairs.size();
    BitVec stable;
    for (size_t i = 0; i < pairs.size(); ++i) {
        VoteResult v = race_vote(dev, cfg, pairs[i], challenges[i], repetitions, rng);
        if (v.flip_rate <= tau) stable.push_back(v.bit);
    }
    rd.stable_count = stable.size();
    rd.retention = pairs.empty() ? 0.0
                                 : static_cast<double>(stable.size()) / static_cast<double>(pairs.size());
    if (stable.size() < digest_bits)
        throw std::runtime_error("build_route_digest: insufficient stable bits (" +
                                 std::to_string(stable.size()) + " < " + std::to_string(digest_bits) +
                                 ")");
    stable.resize(digest_bits);  // surplus discarded in candidate order
    rd.stable_bits = stable;
    rd.digest = sha256(serialize_stable_bits(stable));
    return rd;
}

uint32_t diffuse32(uint32_t h) {
    for (int round = 0; round < 2; ++round) {
        h ^= h >> 16;
        h *= 0x85ebca6bu;
        h ^= h >> 13;
        h *= 0xc2b2ae35u;
        h ^= h >> 16;
    }
    return h;
}

std::vector<int8_t> response_combine(const BitVec& stable_bits, size_t window) {
    if (window == 0 || window > 32) throw std::invalid_argument("response_combine: bad window");
    BitVec padded = stable_bits;
    if (padded.size() % window != 0) padded.resize(padded.size() + window - padded.size() % window, 0);
    std::vector<int8_t> symbols;
    symbols.reserve(padded.size());
    for (size_t off = 0; off < padded.size(); off += window) {
        uint32_t word = 0;
        for (size_t i = 0; i < window; ++i) word = (word << 1) | padded[off + i];
        uint32_t mixed = diffuse32(word);
        for (size_t i = 0; i < window; ++i)
            symbols.push_back(((mixed >> (window - 1 - i)) & 1u) ? -1 : 1);
    }
    return symbols;
}

std::string digest_report_json(const std::string& device_id, const RouteDigest& rd) {
    nlohmann::ordered_json j;
    j["device_id"] = device_id;
    j["candidate_count"] = rd.candidate_count;
    j["stable_count"] = rd.stable_count;
    j["retention"] = rd.retention;
    j["digest_hex"] = to_hex(to_bytes(rd.digest));
    return j.dump(2);
}

}  // namespace meshauth
