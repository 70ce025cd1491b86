// Command-line driver: deterministic end-to-end runs over the simulated
// package (simulate, enroll, selfcheck, auth, metrics, attack). Every output
// byte is a pure function of the run configuration; wall-clock timestamps are
// confined to the dedicated timestamp field of run_summary.json.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "meshauth/attack.hpp"
#include "meshauth/metrics.hpp"
#include "meshauth/protocol.hpp"

using namespace meshauth;
namespace fs = std::filesystem;

namespace {

constexpr int kExitAccept = 0;
constexpr int kExitReject = 1;
constexpr int kExitUsage = 2;

struct RunConfig {
    uint32_t schema_version = 1;
    uint64_t seed = 1001;
    size_t mesh_rows = 16;
    size_t mesh_cols = 16;
    size_t devices = 5;
    size_t chiplets = 2;
    size_t k_chains = 4;
    size_t n_stages = 64;
    double eps = 0.02;
    size_t repetitions = 5;
    double tau = 0.2;
    size_t pair_count = 80;
    size_t hop_min = 4;
    size_t hop_max = 12;
    size_t train_crps = 8000;
    size_t test_crps = 3000;
    size_t attack_epochs = 200;
    size_t metric_challenges = 2000;
    std::string policy = "all";  // or "m-of-n:<m>"
    std::string out_dir = "out";
    std::string ot = "dealer";
};

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CLI::ValidationError("--config", "cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    RunConfig c;
    c.schema_version = j.value("schema_version", c.schema_version);
    if (c.schema_version != 1)
        throw CLI::ValidationError("--config", "unsupported schema_version");
    c.seed = j.value("seed", c.seed);
    c.mesh_rows = j.value("mesh_rows", c.mesh_rows);
    c.mesh_cols = j.value("mesh_cols", c.mesh_cols);
    c.devices = j.value("devices", c.devices);
    c.chiplets = j.value("chiplets", c.chiplets);
    c.k_chains = j.value("k_chains", c.k_chains);
    c.n_stages = j.value("n_stages", c.n_stages);
    c.eps = j.value("eps", c.eps);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.tau = j.value("tau", c.tau);
    c.pair_count = j.value("pair_count", c.pair_count);
    c.hop_min = j.value("hop_min", c.hop_min);
    c.hop_max = j.value("hop_max", c.hop_max);
    c.train_crps = j.value("train_crps", c.train_crps);
    c.test_crps = j.value("test_crps", c.test_crps);
    c.attack_epochs = j.value("attack_epochs", c.attack_epochs);
    c.metric_challenges = j.value("metric_challenges", c.metric_challenges);
    c.policy = j.value("policy", c.policy);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.ot = j.value("ot", c.ot);
    return c;
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    if (text.empty() || text.back() != '\n') f << '\n';
}

// The only place wall-clock time is allowed to appear.
void write_summary(const RunConfig& c, const std::string& command, int exit_code) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["seed"] = c.seed;
    j["exit_code"] = exit_code;
    j["timestamp"] = static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    write_file(fs::path(c.out_dir) / "run_summary.json", j.dump(2));
}

std::string device_name(const RunConfig& c, size_t i) {
    return "dev-" + std::to_string(c.seed + i);
}

DeviceModel make_device(const RunConfig& c, size_t i) {
    return DeviceModel(device_name(c, i), c.seed + i, c.k_chains, c.n_stages, c.eps);
}

std::vector<PathPair> make_pairs(const RunConfig& c) {
    MeshTopology mesh(c.mesh_rows, c.mesh_cols);
    return enumerate_path_pairs(mesh, c.pair_count, c.hop_min, c.hop_max, c.seed ^ 0x5eedu);
}

std::vector<BitVec> make_challenges(const RunConfig& c, size_t count) {
    Rng rng(c.seed, 0xc4a11u);
    std::vector<BitVec> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) out.push_back(random_challenge(c.n_stages, rng));
    return out;
}

QuorumPolicy parse_policy(const std::string& s, size_t& m) {
    if (s == "all") return QuorumPolicy::All;
    if (s.rfind("m-of-n:", 0) == 0) {
        m = std::stoul(s.substr(7));
        return QuorumPolicy::MofN;
    }
    throw CLI::ValidationError("--policy", "expected 'all' or 'm-of-n:<m>'");
}

fs::path repo_dir(const RunConfig& c) { return fs::path(c.out_dir) / "repo"; }

uint64_t next_epoch(const Repository& repo, const std::string& device_id) {
    uint64_t last = 0;
    for (const auto& line : repo.audit_lines()) {
        auto j = nlohmann::json::parse(line);
        if (j.contains("device_id") && j.at("device_id") == device_id)
            last = std::max(last, j.at("epoch").get<uint64_t>());
    }
    return last + 1;
}

int cmd_simulate(const RunConfig& c) {
    auto pairs = make_pairs(c);
    RouterConfig cfg(c.seed ^ 0xc0f1u, c.n_stages);
    auto challenges = make_challenges(c, pairs.size());
    for (size_t d = 0; d < c.devices; ++d) {
        DeviceModel dev = make_device(c, d);
        fs::path dir = fs::path(c.out_dir) / dev.device_id();

        // CRP dump over plain arbiter challenges.
        Rng crp_rng(c.seed, 0xc59 + d);
        std::vector<ChallengeRecord> recs;
        for (size_t i = 0; i < 256; ++i) {
            ChallengeRecord r;
            r.raw_bits = random_challenge(c.n_stages, crp_rng);
            auto f = lift_features(phi_map(r.raw_bits), dev.tap_pairs());
            auto v = majority_vote(dev, f, c.repetitions, crp_rng);
            r.response = v.bit;
            r.repetitions = c.repetitions;
            r.flip_rate = v.flip_rate;
            r.stable = v.flip_rate <= c.tau;
            recs.push_back(std::move(r));
        }
        write_file(dir / "crps.csv", crp_csv(dev.device_id(), recs));

        Rng digest_rng(c.seed, 0xd13 + d);
        auto rd = build_route_digest(dev, cfg, pairs, challenges, c.repetitions, c.tau,
                                     digest_rng);
        write_file(dir / "digest.json", digest_report_json(dev.device_id(), rd));
    }
    return kExitAccept;
}

int cmd_enroll(const RunConfig& c) {
    DeviceModel dev = make_device(c, 0);
    auto pairs = make_pairs(c);
    RouterConfig cfg(c.seed ^ 0xc0f1u, c.n_stages);
    auto challenges = make_challenges(c, pairs.size());

    EnrollParams ep;
    ep.repetitions = c.repetitions;
    ep.tau = c.tau;
    std::vector<ChipletIdentity> chiplets;
    for (size_t i = 0; i < c.chiplets; ++i)
        chiplets.push_back(derive_identity(dev.device_id(), c.seed ^ (0x1d00 + i), ep.widths));

    ManifestSigner signer(Bytes{0x51, 0x6e, 0x21});
    Rng erng(c.seed, 0xe101);
    auto res = enroll(dev, cfg, pairs, challenges, chiplets, ep, signer, erng);

    Repository repo(repo_dir(c).string());
    repo.save_manifest(res.manifest);

    nlohmann::ordered_json j;
    j["device_id"] = res.manifest.device_id;
    j["chiplets"] = res.manifest.commitments.size();
    j["retention"] = res.route.retention;
    j["stable_count"] = res.route.stable_count;
    j["r_star_hex"] = to_hex(to_bytes(res.manifest.r_star));
    write_file(fs::path(c.out_dir) / "enroll.json", j.dump(2));
    return kExitAccept;
}

int cmd_selfcheck(const RunConfig& c, double tamper_stages) {
    Repository repo(repo_dir(c).string());
    DeviceModel dev = make_device(c, 0);
    if (!repo.has_manifest(dev.device_id()))
        throw CLI::ValidationError("selfcheck", "no enrollment manifest; run enroll first");
    auto manifest = repo.load_manifest(dev.device_id());
    auto pairs = make_pairs(c);

    TamperModel tm;
    if (tamper_stages > 0.0) tm.route_b_stage_units[pairs[0].pair_id()] = tamper_stages;

    Rng rng(c.seed, 0x5e1f);
    auto sc = run_self_check(dev, pairs, manifest.profile, ZCheckParams{}, rng,
                             next_epoch(repo, dev.device_id()),
                             tamper_stages > 0.0 ? &tm : nullptr);
    write_file(fs::path(c.out_dir) / "selfcheck.json", recheck_report_json(sc.report));
    return sc.puf_ok ? kExitAccept : kExitReject;
}

int cmd_auth(const RunConfig& c, bool impostor, double tamper_stages) {
    Repository repo(repo_dir(c).string());
    DeviceModel dev = make_device(c, 0);
    if (!repo.has_manifest(dev.device_id()))
        throw CLI::ValidationError("auth", "no enrollment manifest; run enroll first");
    auto manifest = repo.load_manifest(dev.device_id());
    auto pairs = make_pairs(c);

    FiWidths widths;
    uint64_t epoch = next_epoch(repo, dev.device_id());

    TamperModel tm;
    if (tamper_stages > 0.0) tm.route_b_stage_units[pairs[0].pair_id()] = tamper_stages;
    Rng sc_rng(c.seed, 0x5e1f ^ epoch);
    auto sc = run_self_check(dev, pairs, manifest.profile, ZCheckParams{}, sc_rng, epoch,
                             tamper_stages > 0.0 ? &tm : nullptr);

    SessionRegistry registry = repo.replay_registry(dev.device_id());
    AuthParams ap;
    ap.widths = widths;
    ap.ot_name = c.ot;
    BooleanCircuit circuit = build_fi_circuit(widths);
    ap.circuit = &circuit;

    size_t m = 0;
    QuorumPolicy policy = parse_policy(c.policy, m);

    std::vector<bool> votes;
    std::string reports;
    Rng host_rng(c.seed, 0xa071 ^ epoch);
    Rng chip_rng(c.seed, 0xc71b ^ epoch);
    CycleCostModel costs;
    for (size_t i = 0; i < manifest.commitments.size(); ++i) {
        ChipletIdentity identity =
            impostor ? derive_identity(dev.device_id(), c.seed ^ 0xbad0, widths)
                     : derive_identity(dev.device_id(), c.seed ^ (0x1d00 + i), widths);
        auto session = bind_session(manifest, i, epoch + i, sc.puf_ok, widths, registry, host_rng);
        auto res = authenticate_chiplet(session, manifest, identity, sc, ap, host_rng, chip_rng);
        votes.push_back(res.accepted);
        reports += session_report_json(res, costs) + "\n";
        if (res.accepted) {
            AuditRecord rec{res.session.device_id, res.session.chiplet_index, res.session.ch,
                            res.session.epoch,     res.session.nonce,         res.token};
            repo.append_audit(rec);
        } else if (res.tamper_alarm) {
            repo.append_tamper_alarm(res.session.session_id);
        }
        if (i == 0) write_file(fs::path(c.out_dir) / "cycle_cost.json", cycle_cost_json(res, costs));
    }
    write_file(fs::path(c.out_dir) / "auth.json", reports);
    std::cout << reports;

    auto decision = quorum_decide(votes, policy, m);
    return decision.accepted ? kExitAccept : kExitReject;
}

int cmd_metrics(const RunConfig& c) {
    std::vector<DeviceModel> devs;
    for (size_t d = 0; d < c.devices; ++d) devs.push_back(make_device(c, d));
    auto r = compute_metrics(devs, c.metric_challenges, c.repetitions, c.seed ^ 0x3e7);
    write_file(fs::path(c.out_dir) / "metrics.json", metrics_report_json(r));
    return kExitAccept;
}

std::string curve_svg(const std::vector<CurvePoint>& curve) {
    const double w = 640, h = 400, ml = 50, mb = 30;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    auto poly = [&](const char* color, bool test) {
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        size_t max_epoch = curve.empty() ? 1 : curve.back().epoch;
        for (const auto& p : curve) {
            double x = ml + (w - ml - 10) * static_cast<double>(p.epoch) / max_epoch;
            double acc = test ? p.test_accuracy : p.train_accuracy;
            double y = (h - mb) - (h - mb - 10) * acc;
            os << x << "," << y << " ";
        }
        os << "\"/>\n";
    };
    poly("steelblue", false);
    poly("firebrick", true);
    os << "<text x=\"60\" y=\"20\" fill=\"steelblue\">train accuracy</text>\n";
    os << "<text x=\"200\" y=\"20\" fill=\"firebrick\">test accuracy</text>\n";
    os << "</svg>\n";
    return os.str();
}

int cmd_attack(const RunConfig& c, bool svg) {
    DeviceModel hard = make_device(c, 0);
    auto ds = AttackDataset::build(hard, c.train_crps, c.test_crps, FeatureMode::Phi,
                                   ExposureMode::Deployed, c.seed ^ 0xa77);
    auto lr = train_logistic_regression(ds);
    auto mlp = train_mlp(ds, 0, c.attack_epochs, c.seed ^ 0x313, 0.01,
                         std::max<size_t>(1, c.attack_epochs / 100));

    write_file(fs::path(c.out_dir) / "attack.json", attack_report_json(lr, mlp));
    write_file(fs::path(c.out_dir) / "attack_curve.csv", training_curve_csv(mlp.curve));
    if (svg) write_file(fs::path(c.out_dir) / "attack_curve.svg", curve_svg(mlp.curve));
    return kExitAccept;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mesh-embedded delay fingerprint: simulation and authentication driver"};
    app.require_subcommand(1);

    std::string config_path;
    uint64_t seed_flag = 0;
    bool seed_set = false;
    std::string out_flag;
    std::string policy_flag;
    bool impostor = false;
    double tamper_stages = 0.0;
    bool svg = false;

    app.add_option("--config", config_path, "JSON run configuration");
    auto* seed_opt = app.add_option("--seed", seed_flag, "override the config seed");
    app.add_option("--out", out_flag, "override the output directory");
    app.add_option("--policy", policy_flag, "quorum policy: all | m-of-n:<m>");
    app.add_flag("--impostor", impostor, "authenticate with mismatched identity secrets");
    app.add_option("--tamper-stages", tamper_stages,
                   "inject this many stage-units of delay on one route");
    app.add_flag("--svg", svg, "emit an SVG training-curve plot (attack)");

    auto* sim = app.add_subcommand("simulate", "instantiate devices and dump CRPs/digests");
    auto* enr = app.add_subcommand("enroll", "produce and store the enrollment manifest");
    auto* sel = app.add_subcommand("selfcheck", "re-measure the threshold profile");
    auto* aut = app.add_subcommand("auth", "run authentication sessions");
    auto* met = app.add_subcommand("metrics", "compute the fleet quality metrics");
    auto* att = app.add_subcommand("attack", "train the modeling attacks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (seed_opt->count() > 0) {
            cfg.seed = seed_flag;
            seed_set = true;
        }
        (void)seed_set;
        if (!out_flag.empty()) cfg.out_dir = out_flag;
        if (!policy_flag.empty()) cfg.policy = policy_flag;

        int code = kExitUsage;
        std::string name;
        if (sim->parsed()) code = cmd_simulate(cfg), name = "simulate";
        if (enr->parsed()) code = cmd_enroll(cfg), name = "enroll";
        if (sel->parsed()) code = cmd_selfcheck(cfg, tamper_stages), name = "selfcheck";
        if (aut->parsed()) code = cmd_auth(cfg, impostor, tamper_stages), name = "auth";
        if (met->parsed()) code = cmd_metrics(cfg), name = "metrics";
        if (att->parsed()) code = cmd_attack(cfg, svg), name = "attack";
        write_summary(cfg, name, code);
        return code;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitReject;
    }
}
