#include "meshauth/puf.hpp"

#include <sstream>
#include <stdexcept>

namespace meshauth {

DeviceModel::DeviceModel(std::string device_id, uint64_t seed, size_t k_chains, size_t n_stages,
                         double noise_eps, size_t tap_pair_count)
    : device_id_(std::move(device_id)),
      seed_(seed),
      k_chains_(k_chains),
      n_stages_(n_stages),
      noise_eps_(noise_eps) {
    if (k_chains < 1) throw std::invalid_argument("DeviceModel: k_chains must be >= 1");
    if (n_stages < 2) throw std::invalid_argument("DeviceModel: n_stages must be >= 2");
    if (noise_eps < 0.0 || noise_eps >= 0.5)
        throw std::invalid_argument("DeviceModel: noise_eps must be in [0, 0.5)");

    Rng taps(seed, 0x7a50u);
    for (size_t p = 0; p < tap_pair_count; ++p) {
        size_t i = taps.next_below(n_stages);
        size_t j = taps.next_below(n_stages);
        if (i == j) j = (j + 1) % n_stages;
        tap_pairs_.emplace_back(i, j);
    }

    size_t width = n_stages + 1 + tap_pairs_.size();
    weights_.resize(k_chains);
    for (size_t k = 0; k < k_chains; ++k) {
        Rng chain_rng(seed, k + 1);
        weights_[k].resize(width);
        for (size_t i = 0; i < width; ++i) weights_[k][i] = chain_rng.next_gaussian();
    }
}

DeviceModel DeviceModel::with_negated_chain(size_t chain) const {
    DeviceModel copy(*this);
    for (double& w : copy.weights_.at(chain)) w = -w;
    return copy;
}

std::vector<double> phi_map(const BitVec& raw_bits) {
    size_t n = raw_bits.size();
    std::vector<double> phi(n + 1);
    phi[n] = 1.0;
    double prod = 1.0;
    for (size_t i = n; i-- > 0;) {
        prod *= raw_bits[i] ? -1.0 : 1.0;
        phi[i] = prod;
    }
    return phi;
}

std::vector<double> lift_features(const std::vector<double>& phi,
                                  const std::vector<std::pair<size_t, size_t>>& tap_pairs) {
    std::vector<double> out = phi;
    for (const auto& [i, j] : tap_pairs) {
        if (i >= phi.size() || j >= phi.size())
            throw std::out_of_range("lift_features: tap index out of range");
        out.push_back(phi[i] * phi[j]);
    }
    return out;
}

double chain_margin(const DeviceModel& dev, size_t chain, const std::vector<double>& features) {
    const auto& w = dev.weights().at(chain);
    if (features.size() != w.size())
        throw std::invalid_argument("chain_margin: feature width mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) acc += w[i] * features[i];
    return acc;
}

uint8_t evaluate_chain(const DeviceModel& dev, size_t chain, const std::vector<double>& features) {
    // sign(0) resolves to +1, i.e. bit 0
    return chain_margin(dev, chain, features) < 0.0 ? 1 : 0;
}

uint8_t evaluate_noisefree(const DeviceModel& dev, const std::vector<double>& features) {
    uint8_t bit = 0;
    for (size_t k = 0; k < dev.k_chains(); ++k) bit ^= evaluate_chain(dev, k, features);
    return bit;
}

uint8_t evaluate_noisy(const DeviceModel& dev, const std::vector<double>& features, Rng& rng) {
    uint8_t bit = evaluate_noisefree(dev, features);
    if (dev.noise_eps() > 0.0 && rng.next_double() < dev.noise_eps()) bit ^= 1;
    return bit;
}

VoteResult majority_vote(const DeviceModel& dev, const std::vector<double>& features, size_t repetitions,
                         Rng& rng) {
    if (repetitions == 0 || repetitions % 2 == 0)
        throw std::invalid_argument("majority_vote: repetitions must be odd");
    VoteResult res;
    res.votes.reserve(repetitions);
    size_t ones = 0;
    for (size_t r = 0; r < repetitions; ++r) {
        uint8_t v = evaluate_noisy(dev, features, rng);
        res.votes.push_back(v);
        ones += v;
    }
    size_t zeros = repetitions - ones;
    res.bit = ones > zeros ? 1 : 0;
    res.flip_rate = static_cast<double>(std::min(ones, zeros)) / static_cast<double>(repetitions);
    return res;
}

FilterResult stability_filter(const std::vector<ChallengeRecord>& records, double tau) {
    FilterResult out;
    for (const auto& rec : records) {
        if (rec.flip_rate <= tau) out.retained.push_back(rec);
    }
    out.retention = records.empty()
                        ? 0.0
                        : static_cast<double>(out.retained.size()) / static_cast<double>(records.size());
    return out;
}

std::string crp_csv(const std::string& device_id, const std::vector<ChallengeRecord>& records) {
    std::ostringstream os;
    os << "device_id,challenge_hex,response_bit,flip_rate,stable\n";
    for (const auto& rec : records) {
        os << device_id << ',' << bits_to_hex(rec.raw_bits) << ',' << int(rec.response) << ','
           << rec.flip_rate << ',' << (rec.stable ? 1 : 0) << '\n';
    }
    return os.str();
}

BitVec random_challenge(size_t n, Rng& rng) {
    BitVec c(n);
    for (size_t i = 0; i < n; ++i) c[i] = rng.next_bit() ? 1 : 0;
    return c;
}

}  // namespace meshauth
