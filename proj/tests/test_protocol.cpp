#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "meshauth/protocol.hpp"

using namespace meshauth;

namespace {

struct Fixture {
    MeshTopology mesh{8, 8};
    std::vector<PathPair> pairs;
    RouterConfig cfg{7, 64};
    DeviceModel dev{"sip0", 900, 4, 64, 0.02};
    std::vector<BitVec> challenges;
    FiWidths widths;
    ChipletIdentity genuine;
    ManifestSigner signer{Bytes{1, 2, 3}};
    EnrollResult enrolled;
    BooleanCircuit circuit;

    Fixture()
        : pairs(enumerate_path_pairs(mesh, 64, 3, 8, 42)),
          genuine(derive_identity("sip0", 900, widths)),
          circuit(build_fi_circuit(widths)) {
        Rng crng(5, 5);
        for (size_t i = 0; i < pairs.size(); ++i) challenges.push_back(random_challenge(64, crng));
        Rng erng(900, 1);
        enrolled = enroll(dev, cfg, pairs, challenges, {genuine}, EnrollParams{}, signer, erng);
    }

    AuthParams auth_params() const {
        AuthParams ap;
        ap.ot_name = "dealer";
        ap.circuit = &circuit;
        return ap;
    }

    SelfCheckResult passing_selfcheck() const {
        SelfCheckResult sc;
        sc.puf_ok = true;
        sc.puf_reads = 100;
        return sc;
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

// True when `needle` occurs as a contiguous byte run inside `hay`.
bool contains_bytes(const Bytes& hay, const Bytes& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

Bytes file_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("enrollment produces a verifiable manifest deterministically") {
    auto& fx = fixture();
    const auto& m = fx.enrolled.manifest;
    CHECK(m.device_id == "sip0");
    CHECK(m.commitments.size() == 1);
    CHECK(fx.signer.verify(m));
    CHECK(fx.enrolled.route.retention >= 0.60);
    CHECK(fx.enrolled.route.retention <= 0.80);

    // Re-enrolling with the same seeds reproduces digest and commitments.
    Rng erng(900, 1);
    auto again =
        enroll(fx.dev, fx.cfg, fx.pairs, fx.challenges, {fx.genuine}, EnrollParams{}, fx.signer, erng);
    CHECK(again.manifest.r_star == m.r_star);
    CHECK(again.manifest.commitments == m.commitments);

    // Commitment binds to the chiplet secrets and the golden digest.
    CHECK(m.commitments[0] == fx.genuine.commitment(m.r_star, fx.widths));

    // JSON round trip preserves the signature check.
    auto back = manifest_from_json(manifest_json(m));
    CHECK(back.r_star == m.r_star);
    CHECK(back.commitments == m.commitments);
    CHECK(fx.signer.verify(back));
}

TEST_CASE("genuine chiplet authenticates and the token matches the native oracle") {
    auto& fx = fixture();
    SessionRegistry reg;
    Rng hr(1, 2), cr(2, 3);
    auto st = bind_session(fx.enrolled.manifest, 0, 1, true, fx.widths, reg, hr);
    auto res = authenticate_chiplet(st, fx.enrolled.manifest, fx.genuine, fx.passing_selfcheck(),
                                    fx.auth_params(), hr, cr);
    CHECK(res.accepted);
    CHECK_FALSE(res.tamper_alarm);
    CHECK(res.round_trips <= 3);
    CHECK(res.session.phase == SessionPhase::Decided);

    FiInputs in;
    in.g = Bytes(fx.enrolled.manifest.commitments[0].begin(),
                 fx.enrolled.manifest.commitments[0].end());
    in.r_star = Bytes(fx.enrolled.manifest.r_star.begin(), fx.enrolled.manifest.r_star.end());
    in.id = fx.genuine.id();
    in.sig = fx.genuine.sig();
    in.salt = st.salt;
    in.nonce = st.nonce;
    in.puf_ok = true;
    auto expect = evaluate_fi_native(fx.widths, in);
    CHECK(expect.b);
    CHECK(res.token == expect.token);
}

TEST_CASE("failed self-check blocks the session before any garbling") {
    auto& fx = fixture();
    SessionRegistry reg;
    Rng hr(3, 2), cr(4, 3);
    auto st = bind_session(fx.enrolled.manifest, 0, 1, false, fx.widths, reg, hr);
    SelfCheckResult sc;
    sc.puf_ok = false;
    auto res = authenticate_chiplet(st, fx.enrolled.manifest, fx.genuine, sc, fx.auth_params(),
                                    hr, cr);
    CHECK_FALSE(res.accepted);
    CHECK(res.garbled_bytes == 0);
    CHECK(res.transcript_bytes == 0);
    CHECK(res.token.empty());
    CHECK(res.session.phase == SessionPhase::Bound);
}

TEST_CASE("epoch replay is rejected before the 2PC in every trial") {
    auto& fx = fixture();
    SessionRegistry reg;
    Rng hr(5, 2);
    size_t rejected = 0;
    for (uint64_t t = 0; t < 100; ++t) {
        auto st = bind_session(fx.enrolled.manifest, 0, t + 1, true, fx.widths, reg, hr);
        (void)st;
        try {
            bind_session(fx.enrolled.manifest, 0, t + 1, true, fx.widths, reg, hr);  // replay
        } catch (const std::runtime_error&) {
            ++rejected;
        }
    }
    CHECK(rejected == 100);

    // Stale (older) epochs are equally refused.
    CHECK_THROWS_AS(bind_session(fx.enrolled.manifest, 0, 50, true, fx.widths, reg, hr),
                    std::runtime_error);
}

TEST_CASE("impostor with the copied commitment but wrong secrets always fails") {
    auto& fx = fixture();
    SessionRegistry reg;
    Rng hr(6, 2), cr(7, 3);
    size_t rejections = 0;
    for (uint64_t t = 0; t < 100; ++t) {
        ChipletIdentity impostor = derive_identity("sip0", 4000 + t, fx.widths);
        auto st = bind_session(fx.enrolled.manifest, 0, t + 1, true, fx.widths, reg, hr);
        auto res = authenticate_chiplet(st, fx.enrolled.manifest, impostor,
                                        fx.passing_selfcheck(), fx.auth_params(), hr, cr);
        if (!res.accepted && res.token.empty()) ++rejections;
    }
    CHECK(rejections == 100);
}

TEST_CASE("forged commitment enrolls but never authenticates") {
    auto& fx = fixture();
    // A tampered chiplet can hand enrollment an arbitrary digest; enrollment
    // trusts the commitment, so the manifest is produced and signed.
    EnrollmentManifest forged = fx.enrolled.manifest;
    forged.commitments[0] = sha256(std::string("garbage"));
    forged.signature = fx.signer.sign(forged);
    CHECK(fx.signer.verify(forged));

    SessionRegistry reg;
    Rng hr(8, 2), cr(9, 3);
    auto st = bind_session(forged, 0, 1, true, fx.widths, reg, hr);
    auto res = authenticate_chiplet(st, forged, fx.genuine, fx.passing_selfcheck(),
                                    fx.auth_params(), hr, cr);
    CHECK_FALSE(res.accepted);
}

TEST_CASE("quorum policies") {
    CHECK(quorum_decide({true, true, true}, QuorumPolicy::All).accepted);
    CHECK_FALSE(quorum_decide({true, false, true}, QuorumPolicy::All).accepted);
    CHECK_FALSE(quorum_decide({}, QuorumPolicy::All).accepted);
    CHECK(quorum_decide({true, true, true, false}, QuorumPolicy::MofN, 3).accepted);
    CHECK_FALSE(quorum_decide({true, true, false, false}, QuorumPolicy::MofN, 3).accepted);
    CHECK_THROWS_AS(quorum_decide({true}, QuorumPolicy::MofN, 0), std::invalid_argument);
}

TEST_CASE("session and cost reports") {
    auto& fx = fixture();
    SessionRegistry reg;
    Rng hr(10, 2), cr(11, 3);
    auto st = bind_session(fx.enrolled.manifest, 0, 1, true, fx.widths, reg, hr);
    auto res = authenticate_chiplet(st, fx.enrolled.manifest, fx.genuine, fx.passing_selfcheck(),
                                    fx.auth_params(), hr, cr);
    CycleCostModel costs;

    std::string sj = session_report_json(res, costs);
    for (const char* key : {"session_id", "chiplet", "epoch", "nonce_hex", "puf_ok", "b",
                            "token_hex", "rounds", "garbled_bytes", "cycles"})
        CHECK(sj.find(std::string("\"") + key + "\"") != std::string::npos);

    std::string cj = cycle_cost_json(res, costs);
    CHECK(cj.find("\"puf\": 6") != std::string::npos);
    CHECK(cj.find("\"sha\": 96") != std::string::npos);
    CHECK(cj.find("\"rechecks_per_window\": 16") != std::string::npos);

    // Garbled size stays inside the on-package budget band.
    CHECK(res.garbled_bytes >= 300000);
    CHECK(res.garbled_bytes <= 2000000);
}

TEST_CASE("repository store, audit log and replay guard persistence") {
    auto& fx = fixture();
    auto root = std::filesystem::temp_directory_path() / "meshauth-repo-test";
    std::filesystem::remove_all(root);
    Repository repo(root.string());

    repo.save_manifest(fx.enrolled.manifest);
    CHECK(repo.has_manifest("sip0"));
    CHECK(repo.list_manifests() == std::vector<std::string>{"sip0"});
    auto loaded = repo.load_manifest("sip0");
    CHECK(loaded.r_star == fx.enrolled.manifest.r_star);
    CHECK(fx.signer.verify(loaded));

    AuditRecord rec;
    rec.device_id = "sip0";
    rec.chiplet_index = 0;
    rec.ch = Bytes{1, 2, 3, 4};
    rec.epoch = 9;
    rec.nonce = Bytes{5, 6, 7};
    rec.token = Bytes{8, 9};
    repo.append_audit(rec);
    repo.append_tamper_alarm("deadbeef");
    CHECK(repo.audit_lines().size() == 2);

    // The rebuilt registry refuses epochs at or below the logged maximum.
    auto reg = repo.replay_registry("sip0");
    CHECK_THROWS_AS(reg.check_epoch("sip0", 9), std::runtime_error);
    CHECK_NOTHROW(reg.check_epoch("sip0", 10));
    CHECK_FALSE(reg.try_admit_nonce(Bytes{5, 6, 7}));

    std::filesystem::remove_all(root);
}

TEST_CASE("no emitted file or message contains identity secrets or raw bits") {
    auto& fx = fixture();
    auto root = std::filesystem::temp_directory_path() / "meshauth-canary-test";
    std::filesystem::remove_all(root);
    Repository repo(root.string());
    repo.save_manifest(fx.enrolled.manifest);

    SessionRegistry reg;
    Rng hr(12, 2), cr(13, 3);
    auto st = bind_session(fx.enrolled.manifest, 0, 1, true, fx.widths, reg, hr);
    std::vector<Bytes> transcript;
    AuthParams ap = fx.auth_params();
    ap.ot_name = "iknp";  // deployment OT; the dealer reveals choice bits
    ap.message_tap = &transcript;
    auto res = authenticate_chiplet(st, fx.enrolled.manifest, fx.genuine, fx.passing_selfcheck(),
                                    ap, hr, cr);
    REQUIRE(res.accepted);
    CHECK_FALSE(transcript.empty());

    AuditRecord rec{res.session.device_id, res.session.chiplet_index, res.session.ch,
                    res.session.epoch, res.session.nonce, res.token};
    repo.append_audit(rec);

    std::vector<Bytes> emitted = transcript;
    std::string sj = session_report_json(res, CycleCostModel{});
    emitted.emplace_back(sj.begin(), sj.end());
    for (const auto& e : std::filesystem::directory_iterator(root))
        emitted.push_back(file_bytes(e.path()));

    // Canaries: the chiplet secrets and the raw stable response bits.
    std::vector<Bytes> canaries{fx.genuine.id(), fx.genuine.sig(),
                                pack_bits_msb(fx.enrolled.route.stable_bits)};
    // Hex forms too, since reports are JSON text.
    std::vector<Bytes> hex_forms;
    for (const auto& c : canaries) {
        std::string h = to_hex(c);
        hex_forms.emplace_back(h.begin(), h.end());
    }
    canaries.insert(canaries.end(), hex_forms.begin(), hex_forms.end());

    size_t hits = 0;
    for (const auto& blob : emitted)
        for (const auto& c : canaries)
            if (contains_bytes(blob, c)) ++hits;
    CHECK(hits == 0);

    std::filesystem::remove_all(root);
}

TEST_CASE("nonces never repeat across sessions") {
    auto& fx = fixture();
    SessionRegistry reg;
    Rng hr(14, 2);
    std::set<Bytes> nonces;
    for (uint64_t t = 0; t < 200; ++t) {
        auto st = bind_session(fx.enrolled.manifest, 0, t + 1, true, fx.widths, reg, hr);
        CHECK(nonces.insert(st.nonce).second);
    }
}
