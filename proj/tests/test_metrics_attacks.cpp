#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "meshauth/attack.hpp"
#include "meshauth/metrics.hpp"

using namespace meshauth;

TEST_CASE("uniformity, bias and uniqueness basics") {
    BitVec ones(100, 1), alt(100);
    for (size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2;

    CHECK(uniformity({ones}).mean == 1.0);
    CHECK(uniformity({alt}).mean == 0.5);
    CHECK(bias({alt}).mean == 0.0);
    CHECK(bias({ones}).mean == 0.5);

    BitVec comp(alt);
    for (auto& b : comp) b ^= 1;
    CHECK(uniqueness({alt, alt}).mean == 0.0);
    CHECK(uniqueness({alt, comp}).mean == 1.0);
    CHECK_THROWS_AS(uniqueness({alt}), std::invalid_argument);
}

TEST_CASE("reliability over repeated reads") {
    BitVec a{1, 0, 1, 1, 0, 0, 1, 0};
    auto perfect = reliability_and_intra_hd({a, a, a});
    CHECK(perfect.reliability == 1.0);
    CHECK(perfect.intra_hd.mean == 0.0);

    BitVec b(a);
    b[0] ^= 1;  // one dissenting bit in one read
    auto noisy = reliability_and_intra_hd({a, a, b});
    CHECK(noisy.reliability == doctest::Approx(1.0 - 1.0 / 24.0));
}

TEST_CASE("bit aliasing symmetry") {
    BitVec a{1, 1, 0, 0}, comp{0, 0, 1, 1};
    CHECK(bit_aliasing({a, comp}) == 0.5);
    CHECK(bit_aliasing({a, comp}) == bit_aliasing({comp, a}));
}

TEST_CASE("fleet metrics land in the published bands") {
    std::vector<DeviceModel> devs;
    for (uint64_t s = 1; s <= 5; ++s) devs.push_back(instantiate_device(1000 + s, 4, 64, 0.02));
    auto r = compute_metrics(devs, 2000, 5, 77);

    CHECK(r.uniformity.mean >= 0.48);
    CHECK(r.uniformity.mean <= 0.52);
    CHECK(r.uniqueness.mean >= 0.38);
    CHECK(r.uniqueness.mean <= 0.54);
    CHECK(r.reliability >= 0.97);
    CHECK(r.intra_hd.mean <= 0.03);
    CHECK(r.bit_aliasing >= 0.45);
    CHECK(r.bit_aliasing <= 0.55);
    CHECK(r.bit_flip_sensitivity >= 0.45);
    CHECK(r.bit_flip_sensitivity <= 0.58);

    std::string j = metrics_report_json(r);
    for (const char* key : {"uniformity", "bias", "uniqueness_hd", "reliability",
                            "intra_chip_hd", "bit_aliasing", "bit_flip_sensitivity"})
        CHECK(j.find(std::string("\"") + key + "\"") != std::string::npos);
}

TEST_CASE("auc sanity") {
    std::vector<uint8_t> labels{0, 0, 1, 1};
    CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, labels) == 1.0);
    CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, labels) == 0.0);
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, labels) == 0.5);
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, std::vector<uint8_t>{1, 1}), std::invalid_argument);
}

TEST_CASE("logistic regression models a plain arbiter chain") {
    DeviceModel plain("p", 501, 1, 64, 0.02, 0);  // single chain, no tap lifting
    auto ds = AttackDataset::build(plain, 8000, 3000, FeatureMode::Phi, ExposureMode::Oracle, 11);
    auto lr = train_logistic_regression(ds);
    CHECK(lr.test_accuracy >= 0.95);
    CHECK(lr.auc >= 0.95);
}

TEST_CASE("logistic regression fails against the hardened deployed interface") {
    DeviceModel hard("h", 502, 4, 64, 0.02);
    auto ds =
        AttackDataset::build(hard, 8000, 3000, FeatureMode::Phi, ExposureMode::Deployed, 12);
    auto lr = train_logistic_regression(ds);
    CHECK(lr.test_accuracy <= 0.55);
    CHECK(lr.auc >= 0.44);
    CHECK(lr.auc <= 0.56);

    // Deployed mode withholds the raw response bits by construction.
    CHECK_THROWS_AS(ds.raw_train_bits(), std::logic_error);
    CHECK_THROWS_AS(ds.raw_test_bits(), std::logic_error);
}

TEST_CASE("coin-flip labels train to chance") {
    DeviceModel hard("h", 502, 4, 64, 0.02);
    auto ds = AttackDataset::build(hard, 8000, 3000, FeatureMode::Phi, ExposureMode::Oracle, 15);
    Rng rng(16, 16);
    ds.shuffle_labels(rng);
    auto lr = train_logistic_regression(ds);
    CHECK(lr.test_accuracy >= 0.46);
    CHECK(lr.test_accuracy <= 0.54);
}

TEST_CASE("mlp stays at chance on the hardened deployed interface") {
    DeviceModel hard("h", 502, 4, 64, 0.02);
    auto ds =
        AttackDataset::build(hard, 8000, 3000, FeatureMode::Phi, ExposureMode::Deployed, 12);
    auto mlp = train_mlp(ds, 0, 1000, 1, 0.01, 50);
    CHECK(mlp.test_accuracy <= 0.58);
    CHECK_FALSE(mlp.diverged);
    CHECK_FALSE(mlp.curve.empty());
    CHECK(mlp.curve.back().epoch == 1000);

    std::string csv = training_curve_csv(mlp.curve);
    CHECK(csv.rfind("epoch,train_acc,test_acc\n", 0) == 0);

    std::string j = attack_report_json(LrResult{}, mlp);
    CHECK(j.find("mlp_test_accuracy") != std::string::npos);
}

TEST_CASE("mlp learns a known-learnable two-chain instance") {
    DeviceModel toy("t", 503, 2, 32, 0.0, 0);
    auto ds =
        AttackDataset::build(toy, 16000, 3000, FeatureMode::Phi, ExposureMode::Oracle, 13);
    auto mlp = train_mlp(ds, 0, 600, 1, 0.01, 100);
    CHECK(mlp.test_accuracy >= 0.90);
}

TEST_CASE("untrained mlp sits at chance") {
    DeviceModel hard("h", 502, 4, 64, 0.02);
    auto ds = AttackDataset::build(hard, 2000, 1000, FeatureMode::Phi, ExposureMode::Oracle, 14);
    auto mlp = train_mlp(ds, 0, 0, 1, 0.01, 1);
    CHECK(mlp.test_accuracy >= 0.40);
    CHECK(mlp.test_accuracy <= 0.60);
}

TEST_CASE("token hamming distance distribution") {
    Bytes t1{0x00, 0x00}, t2{0xff, 0xff};
    auto same = token_hd_distribution({t1, t1, t1});
    CHECK(same.mean == 0.0);
    CHECK(same.pair_count == 3);
    auto opposite = token_hd_distribution({t1, t2});
    CHECK(opposite.mean == 1.0);

    std::string j = token_hd_json(opposite);
    CHECK(j.find("\"mean\"") != std::string::npos);
}
