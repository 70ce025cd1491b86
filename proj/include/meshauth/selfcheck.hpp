#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "meshauth/fabric.hpp"
#include "meshauth/mesh.hpp"
#include "meshauth/puf.hpp"

namespace meshauth {

// Z* threshold search: starting from the all-cross baseline, the first Z
// switchbox stages of route B are flipped to straight until B consistently
// wins the differential race.

inline constexpr int kZStarNeverWins = -1;

struct ZRecord {
    std::string pair_id;
    int z_star = kZStarNeverWins;
    size_t read_depth = 0;  // majority reads per Z step
    uint64_t epoch = 0;
};

struct BandPolicy {
    double sigma_mult = 3.0;
    double floor = 1.0;  // minimum band half-width, in stages
};

struct ZProfile {
    std::vector<ZRecord> records;
    double z_avg = 0.0;
    double z_std = 0.0;
    double band = 0.0;
    uint64_t epoch = 0;
};

// Extra route delay injected between enrollment and recheck, keyed by
// pair_id. Values are in stage-units (multiples of delta_cross_straight).
struct TamperModel {
    std::unordered_map<std::string, double> route_b_stage_units;
    std::unordered_map<std::string, double> route_a_stage_units;

    double extra_b(const std::string& id, double delta) const {
        auto it = route_b_stage_units.find(id);
        return it == route_b_stage_units.end() ? 0.0 : it->second * delta;
    }
    double extra_a(const std::string& id, double delta) const {
        auto it = route_a_stage_units.find(id);
        return it == route_a_stage_units.end() ? 0.0 : it->second * delta;
    }
};

struct ZCheckParams {
    double delta_cross_straight = 12.0;  // cross-vs-straight delay per switchbox stage
    size_t read_depth = 5;               // odd majority depth M
    // Arbiter jitter std dev per unit flip probability, relative to delta.
    // eps = 0 makes the scan exactly deterministic.
    double jitter_factor = 2.0;
};

// Linear scan over Z with majority voting; B must win at Z and Z+1 before
// Z is accepted (decision-boundary guard). Returns the never-wins sentinel
// if B cannot be made to win within the route's stage count.
ZRecord measure_z_star(const DeviceModel& dev, const PathPair& pair, const ZCheckParams& params,
                       Rng& rng, const TamperModel* tamper = nullptr, uint64_t epoch = 0);

// Population statistics over non-sentinel records; needs at least 8.
ZProfile build_profile(const std::vector<ZRecord>& records, const BandPolicy& policy,
                       uint64_t epoch = 0);

bool is_outlier(const ZProfile& profile, const ZRecord& record);

struct RecheckReport {
    uint64_t epoch = 0;
    std::vector<std::string> flagged;
    std::vector<double> deltas;  // z_star - z_avg per re-measured pair, profile order
};

// Re-measures every pair and flags those outside the enrolled band. Consumes
// only the stored profile, never golden responses.
RecheckReport recheck(const DeviceModel& dev, const std::vector<PathPair>& pairs,
                      const ZProfile& profile, const ZCheckParams& params, Rng& rng,
                      const TamperModel* tamper = nullptr, uint64_t epoch = 0);

std::string profile_json(const ZProfile& profile);
ZProfile profile_from_json(const std::string& text);
std::string recheck_report_json(const RecheckReport& report);

}  // namespace meshauth
