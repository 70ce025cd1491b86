#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "meshauth/circuit.hpp"
#include "meshauth/fabric.hpp"
#include "meshauth/garble.hpp"
#include "meshauth/ot.hpp"
#include "meshauth/selfcheck.hpp"
#include "meshauth/sha256.hpp"
#include "meshauth/transport.hpp"

namespace meshauth {

// Cycle cost constants for the on-package budget model: 6 cycles per
// interconnect proof, 96 per SHA-256 digest, and 96/6 = 16 threshold
// re-measurements per digest window.
struct CycleCostModel {
    uint64_t puf = 6;
    uint64_t sha = 96;
    uint64_t rechecks_per_window = 16;
};

// Chiplet-side identity. ID and SIG are private key material: they feed the
// authentication circuit through OT choice bits only and never appear in any
// protocol message, log, or repository file.
class ChipletIdentity {
public:
    ChipletIdentity(std::string device_id, Bytes id, Bytes sig)
        : device_id_(std::move(device_id)), id_(std::move(id)), sig_(std::move(sig)) {}

    const std::string& device_id() const { return device_id_; }
    const Bytes& id() const { return id_; }    // in-memory use only
    const Bytes& sig() const { return sig_; }  // in-memory use only

    // G = H(ID || SIG || R* || tag); the only value that crosses the boundary.
    Digest256 commitment(const Digest256& r_star, const FiWidths& w) const;

    std::string public_json() const;  // device_id only
private:
    std::string device_id_;
    Bytes id_;
    Bytes sig_;
};

// Deterministic identity minting so the chiplet can re-derive its secrets
// from its own seed instead of persisting them anywhere.
ChipletIdentity derive_identity(const std::string& device_id, uint64_t seed, const FiWidths& w);

Bytes enroll_tag_bytes(const FiWidths& w);

// Integrator-side enrollment record for one package: the golden route digest,
// one commitment per chiplet, the threshold baseline, and trace metadata.
struct EnrollmentManifest {
    std::string device_id;
    Digest256 r_star{};
    uint32_t digest_version = 0;
    std::string wafer;
    std::string lot;
    std::vector<Digest256> commitments;  // chiplet index -> G_i
    ZProfile profile;
    Bytes signature;  // HMAC over the canonical body (test signer)
};

// HMAC-SHA-256 stand-in for the integrator's manifest signer.
class ManifestSigner {
public:
    explicit ManifestSigner(Bytes key) : key_(std::move(key)) {}
    Bytes sign(const EnrollmentManifest& m) const;
    bool verify(const EnrollmentManifest& m) const;

private:
    Bytes key_;
};

std::string manifest_json(const EnrollmentManifest& m);
EnrollmentManifest manifest_from_json(const std::string& text);

struct EnrollParams {
    size_t repetitions = 5;
    double tau = 0.2;
    ZCheckParams zparams;
    BandPolicy band;
    FiWidths widths;
    std::string wafer = "W00";
    std::string lot = "L00";
};

struct EnrollResult {
    EnrollmentManifest manifest;
    RouteDigest route;  // retention statistics; stable bits stay local
};

// Measures the golden route digest and the threshold baseline, collects each
// chiplet's commitment and signs the manifest. Runs at integration time only;
// only G_i crosses the chiplet boundary.
EnrollResult enroll(const DeviceModel& dev, const RouterConfig& cfg,
                    const std::vector<PathPair>& pairs, const std::vector<BitVec>& challenges,
                    const std::vector<ChipletIdentity>& chiplets, const EnrollParams& params,
                    const ManifestSigner& signer, Rng& rng);

struct SelfCheckResult {
    bool puf_ok = false;
    uint64_t epoch = 0;
    size_t flagged_pairs = 0;
    uint64_t puf_reads = 0;  // race reads spent on the threshold scan
    RecheckReport report;
};

// Golden-free readiness gate: re-measures the threshold profile and passes
// only when no route falls outside the enrolled band.
SelfCheckResult run_self_check(const DeviceModel& dev, const std::vector<PathPair>& pairs,
                               const ZProfile& profile, const ZCheckParams& params, Rng& rng,
                               uint64_t epoch, const TamperModel* tamper = nullptr);

enum class SessionPhase : uint8_t { Bound, Garbled, Transferred, Evaluated, Decided };

// Host-side replay guard: epochs are strictly monotone per device and a
// logged (epoch, nonce) pair is never admitted twice.
class SessionRegistry {
public:
    // Throws std::runtime_error on a stale or repeated epoch.
    void check_epoch(const std::string& device_id, uint64_t epoch);
    // False when the nonce was already seen (caller resamples).
    bool try_admit_nonce(const Bytes& nonce);

private:
    std::map<std::string, uint64_t> last_epoch_;
    std::set<Bytes> seen_nonces_;
};

struct SessionState {
    std::string session_id;
    std::string device_id;
    size_t chiplet_index = 0;
    uint64_t epoch = 0;
    Bytes ch;     // public session challenge context
    Bytes nonce;  // fresh per session
    Bytes salt;   // hkdf(R*, ch || epoch)
    bool puf_ok = false;
    SessionPhase phase = SessionPhase::Bound;
};

// Binds one session: enforces epoch monotonicity, samples a fresh challenge
// context and nonce (resampling on collision) and derives the public salt.
SessionState bind_session(const EnrollmentManifest& manifest, size_t chiplet_index,
                          uint64_t epoch, bool puf_ok, const FiWidths& widths,
                          SessionRegistry& registry, Rng& host_rng);

struct AuthParams {
    FiWidths widths;
    std::string ot_name = "iknp";
    CycleCostModel costs;
    const BooleanCircuit* circuit = nullptr;  // optional prebuilt circuit to reuse
    std::vector<Bytes>* message_tap = nullptr;  // optional transcript capture
};

struct SessionResult {
    SessionState session;
    bool accepted = false;  // decoded b output
    bool tamper_alarm = false;  // undecodable garbled outputs
    Bytes token;            // released only when accepted
    size_t round_trips = 0;
    size_t garbled_bytes = 0;
    size_t transcript_bytes = 0;
    uint64_t puf_reads = 0;
    uint64_t sha_digests = 0;
};

// One constant-round authentication session. With puf_ok = 0 the session
// never leaves the bound phase and no circuit material is produced. The
// host garbles the fixed circuit, ships its own and the public labels,
// serves the chiplet's identity labels through OT, and decodes the returned
// outputs. The token never leaves the host unless b accepted.
SessionResult authenticate_chiplet(const SessionState& session,
                                   const EnrollmentManifest& manifest,
                                   const ChipletIdentity& chiplet,
                                   const SelfCheckResult& selfcheck, const AuthParams& params,
                                   Rng& host_rng, Rng& chiplet_rng);

std::string session_report_json(const SessionResult& r, const CycleCostModel& costs);

// Cost breakdown: the fixed per-operation cycle constants plus this
// session's measured transcript figures.
std::string cycle_cost_json(const SessionResult& r, const CycleCostModel& costs);

enum class QuorumPolicy : uint8_t { All, MofN };

struct QuorumDecision {
    bool accepted = false;
    size_t yes = 0;
    size_t total = 0;
};

QuorumDecision quorum_decide(const std::vector<bool>& votes, QuorumPolicy policy, size_t m = 0);

// Audit entry appended on acceptance; never contains ID, SIG or raw bits.
struct AuditRecord {
    std::string device_id;
    size_t chiplet_index = 0;
    Bytes ch;
    uint64_t epoch = 0;
    Bytes nonce;
    Bytes token;
};

// File-backed store for manifests plus an append-only audit log in JSON lines.
class Repository {
public:
    explicit Repository(std::string root);

    const std::string& root() const { return root_; }

    void save_manifest(const EnrollmentManifest& m) const;
    EnrollmentManifest load_manifest(const std::string& device_id) const;
    bool has_manifest(const std::string& device_id) const;
    std::vector<std::string> list_manifests() const;

    void append_audit(const AuditRecord& r) const;
    void append_tamper_alarm(const std::string& session_id) const;
    std::vector<std::string> audit_lines() const;

    // Replays the audit log into a fresh registry so restarts keep the
    // replay guard.
    SessionRegistry replay_registry(const std::string& device_id) const;

private:
    std::string root_;
};

}  // namespace meshauth
