#include "meshauth/selfcheck.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace meshauth {

namespace {

double route_base_delay(const DeviceModel& dev, const std::vector<uint32_t>& path) {
    double d = 0.0;
    for (uint32_t e : path) d += site_delay(dev, e);
    return d;
}

}  // namespace

ZRecord measure_z_star(const DeviceModel& dev, const PathPair& pair, const ZCheckParams& params,
                       Rng& rng, const TamperModel* tamper, uint64_t epoch) {
    if (params.read_depth == 0 || params.read_depth % 2 == 0)
        throw std::invalid_argument("measure_z_star: read depth must be odd");
    if (params.delta_cross_straight <= 0.0)
        throw std::invalid_argument("measure_z_star: delta_cross_straight must be positive");

    const double delta = params.delta_cross_straight;
    const size_t n = pair.tile_stages();  // switchbox stages per route
    double base_a = route_base_delay(dev, pair.path_a);
    double base_b = route_base_delay(dev, pair.path_b);
    if (tamper != nullptr) {
        base_a += tamper->extra_a(pair.pair_id(), delta);
        base_b += tamper->extra_b(pair.pair_id(), delta);
    }
    // Both routes all-cross at baseline; flipping the first Z stages of B
    // to straight removes Z * delta from route B.
    const double cross_a = static_cast<double>(n) * delta;
    const double sigma = dev.noise_eps() * params.jitter_factor * delta;

    auto b_wins_majority = [&](size_t z) {
        double margin = (base_a + cross_a) - (base_b + (static_cast<double>(n) - double(z)) * delta);
        size_t wins = 0;
        for (size_t m = 0; m < params.read_depth; ++m) {
            double v = margin;
            if (sigma > 0.0) v += sigma * rng.next_gaussian();
            if (v > 0.0) ++wins;  // B strictly earlier
        }
        return wins > params.read_depth / 2;
    };

    ZRecord rec;
    rec.pair_id = pair.pair_id();
    rec.read_depth = params.read_depth;
    rec.epoch = epoch;
    bool prev_win = false;
    // Evaluate Z = 0..n once each; accept the smallest Z that wins together
    // with its successor (the final stage needs no successor).
    std::optional<size_t> pending;
    for (size_t z = 0; z <= n; ++z) {
        bool win = b_wins_majority(z);
        if (pending && win) {
            rec.z_star = static_cast<int>(*pending);
            return rec;
        }
        pending = win ? std::optional<size_t>(z) : std::nullopt;
        prev_win = win;
    }
    if (prev_win) {
        rec.z_star = static_cast<int>(n);
        return rec;
    }
    rec.z_star = kZStarNeverWins;
    return rec;
}

ZProfile build_profile(const std::vector<ZRecord>& records, const BandPolicy& policy,
                       uint64_t epoch) {
    size_t valid = 0;
    double sum = 0.0;
    for (const auto& r : records) {
        if (r.z_star != kZStarNeverWins) {
            ++valid;
            sum += r.z_star;
        }
    }
    if (valid < 8) throw std::invalid_argument("build_profile: too few non-sentinel records");
    ZProfile p;
    p.records = records;
    p.epoch = epoch;
    p.z_avg = sum / static_cast<double>(valid);
    double var = 0.0;
    for (const auto& r : records) {
        if (r.z_star != kZStarNeverWins) {
            double d = r.z_star - p.z_avg;
            var += d * d;
        }
    }
    p.z_std = std::sqrt(var / static_cast<double>(valid));
    p.band = std::max(policy.sigma_mult * p.z_std, policy.floor);
    return p;
}

bool is_outlier(const ZProfile& profile, const ZRecord& record) {
    if (record.z_star == kZStarNeverWins) return true;  // cannot-be-overtaken routes are anomalous
    return std::abs(record.z_star - profile.z_avg) > profile.band;
}

RecheckReport recheck(const DeviceModel& dev, const std::vector<PathPair>& pairs,
                      const ZProfile& profile, const ZCheckParams& params, Rng& rng,
                      const TamperModel* tamper, uint64_t epoch) {
    RecheckReport report;
    report.epoch = epoch;
    for (const auto& pair : pairs) {
        ZRecord rec = measure_z_star(dev, pair, params, rng, tamper, epoch);
        report.deltas.push_back(rec.z_star == kZStarNeverWins
                                    ? std::numeric_limits<double>::infinity()
                                    : rec.z_star - profile.z_avg);
        if (is_outlier(profile, rec)) report.flagged.push_back(rec.pair_id);
    }
    return report;
}

std::string profile_json(const ZProfile& profile) {
    nlohmann::ordered_json j;
    j["epoch"] = profile.epoch;
    j["pairs"] = nlohmann::ordered_json::array();
    for (const auto& r : profile.records) {
        j["pairs"].push_back({{"pair_id", r.pair_id}, {"z_star", r.z_star}, {"M", r.read_depth}});
    }
    j["z_avg"] = profile.z_avg;
    j["z_std"] = profile.z_std;
    j["band"] = profile.band;
    return j.dump(2);
}

ZProfile profile_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    ZProfile p;
    p.epoch = j.at("epoch").get<uint64_t>();
    for (const auto& e : j.at("pairs")) {
        ZRecord r;
        r.pair_id = e.at("pair_id").get<std::string>();
        r.z_star = e.at("z_star").get<int>();
        r.read_depth = e.at("M").get<size_t>();
        r.epoch = p.epoch;
        p.records.push_back(std::move(r));
    }
    p.z_avg = j.at("z_avg").get<double>();
    p.z_std = j.at("z_std").get<double>();
    p.band = j.at("band").get<double>();
    return p;
}

std::string recheck_report_json(const RecheckReport& report) {
    nlohmann::ordered_json j;
    j["epoch"] = report.epoch;
    j["flagged"] = report.flagged;
    j["deltas"] = nlohmann::ordered_json::array();
    for (double d : report.deltas) {
        if (std::isinf(d))
            j["deltas"].push_back("never-wins");
        else
            j["deltas"].push_back(d);
    }
    return j.dump(2);
}

}  // namespace meshauth
