#include "meshauth/protocol.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace meshauth {

namespace {

namespace fs = std::filesystem;
using Party = DuplexChannel::Party;

Bytes random_bytes(Rng& rng, size_t n) {
    Bytes out(n);
    for (auto& x : out) x = static_cast<uint8_t>(rng.next_u64());
    return out;
}

Bytes truncated_digest(const Digest256& d, size_t nbits) {
    return Bytes(d.begin(), d.begin() + nbits / 8);
}

// Canonical signing body: the manifest JSON with an empty signature slot.
std::string manifest_body(const EnrollmentManifest& m) {
    EnrollmentManifest copy = m;
    copy.signature.clear();
    return manifest_json(copy);
}

// SHA-256 compressions spent outside the circuit per session: one HKDF
// (extract plus one expand block, two hashes per HMAC) for the salt.
constexpr uint64_t kSaltShaDigests = 8;

}  // namespace

Bytes enroll_tag_bytes(const FiWidths& w) {
    uint32_t v = kEnrollTagValue & ((1u << std::min<size_t>(w.tag_bits, 31)) - 1u);
    Bytes out(w.tag_bits / 8);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>(v >> (8 * (out.size() - 1 - i)));
    return out;
}

Digest256 ChipletIdentity::commitment(const Digest256& r_star, const FiWidths& w) const {
    Bytes msg = concat(concat(id_, sig_), truncated_digest(r_star, w.digest_bits));
    msg = concat(msg, enroll_tag_bytes(w));
    return sha256(msg);
}

std::string ChipletIdentity::public_json() const {
    nlohmann::ordered_json j;
    j["device_id"] = device_id_;
    return j.dump(2);
}

ChipletIdentity derive_identity(const std::string& device_id, uint64_t seed, const FiWidths& w) {
    Rng rng(seed, 0x1de57171u);
    Bytes id = random_bytes(rng, w.id_bits / 8);
    Bytes sig = random_bytes(rng, w.sig_bits / 8);
    return ChipletIdentity(device_id, std::move(id), std::move(sig));
}

Bytes ManifestSigner::sign(const EnrollmentManifest& m) const {
    std::string body = manifest_body(m);
    return hmac_sha256(key_, Bytes(body.begin(), body.end()));
}

bool ManifestSigner::verify(const EnrollmentManifest& m) const { return sign(m) == m.signature; }

std::string manifest_json(const EnrollmentManifest& m) {
    nlohmann::ordered_json j;
    j["device_id"] = m.device_id;
    j["r_star_hex"] = to_hex(to_bytes(m.r_star));
    j["digest_version"] = m.digest_version;
    j["wafer"] = m.wafer;
    j["lot"] = m.lot;
    j["commitments"] = nlohmann::ordered_json::array();
    for (const auto& g : m.commitments) j["commitments"].push_back(to_hex(to_bytes(g)));
    j["profile"] = nlohmann::ordered_json::parse(profile_json(m.profile));
    j["signature_hex"] = to_hex(m.signature);
    return j.dump(2);
}

EnrollmentManifest manifest_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    EnrollmentManifest m;
    m.device_id = j.at("device_id").get<std::string>();
    Bytes r = from_hex(j.at("r_star_hex").get<std::string>());
    if (r.size() != 32) throw std::invalid_argument("manifest_from_json: digest width mismatch");
    std::copy(r.begin(), r.end(), m.r_star.begin());
    m.digest_version = j.at("digest_version").get<uint32_t>();
    m.wafer = j.at("wafer").get<std::string>();
    m.lot = j.at("lot").get<std::string>();
    for (const auto& e : j.at("commitments")) {
        Bytes g = from_hex(e.get<std::string>());
        if (g.size() != 32)
            throw std::invalid_argument("manifest_from_json: commitment width mismatch");
        Digest256 d;
        std::copy(g.begin(), g.end(), d.begin());
        m.commitments.push_back(d);
    }
    m.profile = profile_from_json(j.at("profile").dump());
    m.signature = from_hex(j.at("signature_hex").get<std::string>());
    return m;
}

EnrollResult enroll(const DeviceModel& dev, const RouterConfig& cfg,
                    const std::vector<PathPair>& pairs, const std::vector<BitVec>& challenges,
                    const std::vector<ChipletIdentity>& chiplets, const EnrollParams& params,
                    const ManifestSigner& signer, Rng& rng) {
    Rng digest_rng = rng.split(1);
    Rng z_rng = rng.split(3);

    RouteDigest route = build_route_digest(dev, cfg, pairs, challenges, params.repetitions,
                                           params.tau, digest_rng);

    std::vector<ZRecord> records;
    records.reserve(pairs.size());
    for (const auto& p : pairs)
        records.push_back(measure_z_star(dev, p, params.zparams, z_rng, nullptr, 0));
    ZProfile profile = build_profile(records, params.band, 0);

    EnrollResult out{EnrollmentManifest{}, route};
    out.manifest.device_id = dev.device_id();
    out.manifest.r_star = route.digest;
    out.manifest.digest_version = params.widths.version;
    out.manifest.wafer = params.wafer;
    out.manifest.lot = params.lot;
    for (const auto& c : chiplets)
        out.manifest.commitments.push_back(c.commitment(route.digest, params.widths));
    out.manifest.profile = profile;
    out.manifest.signature = signer.sign(out.manifest);
    return out;
}

SelfCheckResult run_self_check(const DeviceModel& dev, const std::vector<PathPair>& pairs,
                               const ZProfile& profile, const ZCheckParams& params, Rng& rng,
                               uint64_t epoch, const TamperModel* tamper) {
    SelfCheckResult r;
    r.epoch = epoch;
    r.report = recheck(dev, pairs, profile, params, rng, tamper, epoch);
    r.flagged_pairs = r.report.flagged.size();
    r.puf_ok = r.report.flagged.empty();
    for (const auto& p : pairs)
        r.puf_reads += (p.tile_stages() + 1) * params.read_depth;  // linear threshold scan
    return r;
}

void SessionRegistry::check_epoch(const std::string& device_id, uint64_t epoch) {
    auto it = last_epoch_.find(device_id);
    if (it != last_epoch_.end() && epoch <= it->second)
        throw std::runtime_error("session registry: stale epoch for " + device_id);
    last_epoch_[device_id] = epoch;
}

bool SessionRegistry::try_admit_nonce(const Bytes& nonce) {
    return seen_nonces_.insert(nonce).second;
}

SessionState bind_session(const EnrollmentManifest& manifest, size_t chiplet_index,
                          uint64_t epoch, bool puf_ok, const FiWidths& widths,
                          SessionRegistry& registry, Rng& host_rng) {
    if (chiplet_index >= manifest.commitments.size())
        throw std::out_of_range("bind_session: unknown chiplet index");
    registry.check_epoch(manifest.device_id, epoch);

    SessionState s;
    s.device_id = manifest.device_id;
    s.chiplet_index = chiplet_index;
    s.epoch = epoch;
    s.puf_ok = puf_ok;
    s.ch = random_bytes(host_rng, 16);
    do {
        s.nonce = random_bytes(host_rng, widths.nonce_bits / 8);
    } while (!registry.try_admit_nonce(s.nonce));
    s.salt = derive_session_salt(manifest.r_star, s.ch, epoch, widths.salt_bits / 8);

    Bytes sid = to_bytes(sha256(concat(
        concat(Bytes(manifest.device_id.begin(), manifest.device_id.end()), s.nonce),
        concat(s.ch, u64_be(epoch)))));
    s.session_id = to_hex(Bytes(sid.begin(), sid.begin() + 8));
    s.phase = SessionPhase::Bound;
    return s;
}

SessionResult authenticate_chiplet(const SessionState& session,
                                   const EnrollmentManifest& manifest,
                                   const ChipletIdentity& chiplet,
                                   const SelfCheckResult& selfcheck, const AuthParams& params,
                                   Rng& host_rng, Rng& chiplet_rng) {
    const FiWidths& w = params.widths;
    const bool toy = w.digest_bits != 256;  // reduced instances use the toy hash

    SessionResult r;
    r.session = session;
    r.puf_reads = selfcheck.puf_reads;
    r.sha_digests = 0;

    // Readiness gate: a failed self-check never starts the 2PC.
    if (!session.puf_ok) return r;

    FiInputs in;
    in.g = truncated_digest(manifest.commitments.at(session.chiplet_index), w.digest_bits);
    in.r_star = truncated_digest(manifest.r_star, w.digest_bits);
    in.id = chiplet.id();
    in.sig = chiplet.sig();
    in.salt = session.salt;
    in.nonce = session.nonce;
    in.puf_ok = session.puf_ok;
    BitVec input_bits = fi_input_bits(w, in);

    BooleanCircuit local;
    const BooleanCircuit* circuit = params.circuit;
    if (circuit == nullptr) {
        local = build_fi_circuit(w, toy);
        circuit = &local;
    }

    Garbling g = garble(*circuit, host_rng);
    Bytes tables_blob = serialize_tables(g.tables);
    r.garbled_bytes = tables_blob.size();
    r.session.phase = SessionPhase::Garbled;

    DuplexChannel ch;
    ch.set_tap(params.message_tap);

    // Flight 1, host: tables plus the host-encoded (garbler and public) labels.
    Bytes flight1 = tables_blob;
    auto push_label = [&flight1, &g, &input_bits](uint32_t wire) {
        Bytes lb = serialize_label(g.secrets.input_labels[wire][input_bits[wire]]);
        flight1.insert(flight1.end(), lb.begin(), lb.end());
    };
    for (uint32_t wire : circuit->garbler_inputs) push_label(wire);
    for (uint32_t wire : circuit->public_inputs) push_label(wire);
    ch.send(Party::A, std::move(flight1));

    // Chiplet side: unpack the flight.
    Bytes msg1 = ch.recv(Party::B);
    GarbledTables tables =
        deserialize_tables(Bytes(msg1.begin(), msg1.begin() + tables_blob.size()));
    std::vector<Label> wire_labels(circuit->input_count);
    size_t off = tables_blob.size();
    for (uint32_t wire : circuit->garbler_inputs) {
        wire_labels[wire] = deserialize_label(msg1, off);
        off += 16;
    }
    for (uint32_t wire : circuit->public_inputs) {
        wire_labels[wire] = deserialize_label(msg1, off);
        off += 16;
    }

    // Identity labels via OT; the host never learns the choice bits and the
    // chiplet never sees the opposite labels.
    std::vector<LabelPair> pairs;
    BitVec choices;
    for (uint32_t wire : circuit->evaluator_inputs) {
        pairs.push_back(g.secrets.input_labels[wire]);
        choices.push_back(input_bits[wire]);
    }
    auto ot = make_ot(params.ot_name);
    auto chosen = ot->run(ch, Party::A, pairs, choices, host_rng, chiplet_rng);
    for (size_t i = 0; i < chosen.size(); ++i)
        wire_labels[circuit->evaluator_inputs[i]] = chosen[i];
    r.session.phase = SessionPhase::Transferred;

    // Chiplet evaluates and returns the output labels.
    auto out_labels = evaluate_garbled(*circuit, tables, wire_labels);
    Bytes flight_out;
    for (const auto& l : out_labels) {
        Bytes lb = serialize_label(l);
        flight_out.insert(flight_out.end(), lb.begin(), lb.end());
    }
    ch.send(Party::B, std::move(flight_out));
    r.session.phase = SessionPhase::Evaluated;

    Bytes msg_out = ch.recv(Party::A);
    std::vector<Label> host_out(circuit->outputs.size());
    for (size_t i = 0; i < host_out.size(); ++i) host_out[i] = deserialize_label(msg_out, i * 16);
    try {
        BitVec decoded = decode_outputs(*circuit, g.secrets, host_out);
        r.accepted = decoded[0] != 0;
        if (r.accepted) r.token = pack_bits_msb(BitVec(decoded.begin() + 1, decoded.end()));
    } catch (const UndecodableLabel&) {
        r.accepted = false;
        r.tamper_alarm = true;
    }

    r.round_trips = ch.round_trips();
    r.transcript_bytes = ch.bytes_sent();
    r.sha_digests = 2 + kSaltShaDigests;  // two in-circuit hashes plus the salt HKDF
    r.session.phase = SessionPhase::Decided;
    return r;
}

std::string session_report_json(const SessionResult& r, const CycleCostModel& costs) {
    nlohmann::ordered_json j;
    j["session_id"] = r.session.session_id;
    j["chiplet"] = r.session.device_id + "#" + std::to_string(r.session.chiplet_index);
    j["epoch"] = r.session.epoch;
    j["nonce_hex"] = to_hex(r.session.nonce);
    j["puf_ok"] = r.session.puf_ok;
    j["b"] = r.accepted;
    j["token_hex"] = to_hex(r.token);
    j["rounds"] = r.round_trips;
    j["garbled_bytes"] = r.garbled_bytes;
    j["cycles"] = {{"puf", costs.puf * r.puf_reads}, {"sha", costs.sha * r.sha_digests}};
    if (r.tamper_alarm) j["tamper_alarm"] = true;
    return j.dump(2);
}

std::string cycle_cost_json(const SessionResult& r, const CycleCostModel& costs) {
    nlohmann::ordered_json j;
    j["cycle_model"] = {{"puf", costs.puf},
                        {"sha", costs.sha},
                        {"rechecks_per_window", costs.rechecks_per_window}};
    j["puf_reads"] = r.puf_reads;
    j["sha_digests"] = r.sha_digests;
    j["puf_cycles"] = costs.puf * r.puf_reads;
    j["sha_cycles"] = costs.sha * r.sha_digests;
    j["garbled_bytes"] = r.garbled_bytes;
    j["transcript_bytes"] = r.transcript_bytes;
    j["rounds"] = r.round_trips;
    return j.dump(2);
}

QuorumDecision quorum_decide(const std::vector<bool>& votes, QuorumPolicy policy, size_t m) {
    QuorumDecision d;
    d.total = votes.size();
    for (bool v : votes)
        if (v) ++d.yes;
    switch (policy) {
        case QuorumPolicy::All: d.accepted = d.total > 0 && d.yes == d.total; break;
        case QuorumPolicy::MofN:
            if (m == 0 || m > d.total) throw std::invalid_argument("quorum_decide: bad m");
            d.accepted = d.yes >= m;
            break;
    }
    return d;
}

Repository::Repository(std::string root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

void Repository::save_manifest(const EnrollmentManifest& m) const {
    std::ofstream f(fs::path(root_) / (m.device_id + ".manifest.json"));
    if (!f) throw std::runtime_error("repository: cannot write manifest");
    f << manifest_json(m) << '\n';
}

EnrollmentManifest Repository::load_manifest(const std::string& device_id) const {
    std::ifstream f(fs::path(root_) / (device_id + ".manifest.json"));
    if (!f) throw std::runtime_error("repository: no manifest for " + device_id);
    std::stringstream ss;
    ss << f.rdbuf();
    return manifest_from_json(ss.str());
}

bool Repository::has_manifest(const std::string& device_id) const {
    return fs::exists(fs::path(root_) / (device_id + ".manifest.json"));
}

std::vector<std::string> Repository::list_manifests() const {
    std::vector<std::string> out;
    const std::string suffix = ".manifest.json";
    for (const auto& e : fs::directory_iterator(root_)) {
        std::string name = e.path().filename().string();
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            out.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

void Repository::append_audit(const AuditRecord& rec) const {
    nlohmann::ordered_json j;
    j["device_id"] = rec.device_id;
    j["chiplet_index"] = rec.chiplet_index;
    j["ch_hex"] = to_hex(rec.ch);
    j["epoch"] = rec.epoch;
    j["nonce_hex"] = to_hex(rec.nonce);
    j["token_hex"] = to_hex(rec.token);
    std::ofstream f(fs::path(root_) / "audit.jsonl", std::ios::app);
    if (!f) throw std::runtime_error("repository: cannot append audit log");
    f << j.dump() << '\n';
}

void Repository::append_tamper_alarm(const std::string& session_id) const {
    nlohmann::ordered_json j;
    j["tamper_alarm"] = true;
    j["session_id"] = session_id;
    std::ofstream f(fs::path(root_) / "audit.jsonl", std::ios::app);
    if (!f) throw std::runtime_error("repository: cannot append audit log");
    f << j.dump() << '\n';
}

std::vector<std::string> Repository::audit_lines() const {
    std::ifstream f(fs::path(root_) / "audit.jsonl");
    std::vector<std::string> out;
    std::string line;
    while (std::getline(f, line))
        if (!line.empty()) out.push_back(line);
    return out;
}

SessionRegistry Repository::replay_registry(const std::string& device_id) const {
    SessionRegistry reg;
    uint64_t last = 0;
    bool any = false;
    for (const auto& line : audit_lines()) {
        auto j = nlohmann::json::parse(line);
        if (!j.contains("device_id")) continue;  // alarm entries carry no session data
        reg.try_admit_nonce(from_hex(j.at("nonce_hex").get<std::string>()));
        if (j.at("device_id").get<std::string>() == device_id) {
            last = std::max(last, j.at("epoch").get<uint64_t>());
            any = true;
        }
    }
    if (any) reg.check_epoch(device_id, last);  // consume up to the logged epoch
    return reg;
}

}  // namespace meshauth
