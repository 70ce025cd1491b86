#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "meshauth/bits.hpp"
#include "meshauth/puf.hpp"

namespace meshauth {

enum class FeatureMode : uint8_t { Raw, Phi, Lifted };
enum class ExposureMode : uint8_t { Oracle, Deployed };

// Fixed train/test CRP corpus for the modeling attacks. Oracle mode exposes
// raw (majority-voted) response bits; deployed mode exposes only diffused
// combiner symbols, and the raw bits are unreachable by construction.
class AttackDataset {
public:
    static AttackDataset build(const DeviceModel& dev, size_t train_count, size_t test_count,
                               FeatureMode features, ExposureMode exposure, uint64_t seed,
                               size_t repetitions = 5);

    const Eigen::MatrixXd& x_train() const { return x_train_; }
    const Eigen::MatrixXd& x_test() const { return x_test_; }
    const Eigen::VectorXd& y_train() const { return y_train_; }
    const Eigen::VectorXd& y_test() const { return y_test_; }

    FeatureMode features() const { return features_; }
    ExposureMode exposure() const { return exposure_; }

    // Raw response bits; throws std::logic_error in deployed mode (the
    // interface withholds raw data).
    const BitVec& raw_train_bits() const;
    const BitVec& raw_test_bits() const;

    // Test hook: replaces labels by fair coin flips (null model).
    void shuffle_labels(Rng& rng);

private:
    AttackDataset() = default;
    Eigen::MatrixXd x_train_, x_test_;
    Eigen::VectorXd y_train_, y_test_;
    BitVec raw_train_, raw_test_;
    FeatureMode features_ = FeatureMode::Phi;
    ExposureMode exposure_ = ExposureMode::Oracle;
};

// Trapezoidal ROC integration over score thresholds.
double roc_auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels);

struct LrResult {
    Eigen::VectorXd weights;  // includes trailing intercept
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double auc = 0.0;
    size_t epochs_run = 0;
};

// Full-batch gradient descent logistic regression with early stop on a
// train-loss plateau.
LrResult train_logistic_regression(const AttackDataset& ds, size_t max_epochs = 2000,
                                   double learning_rate = 0.5);

struct CurvePoint {
    size_t epoch = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

struct MlpResult {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<CurvePoint> curve;
    bool diverged = false;
};

// One tanh hidden layer sized to the challenge dimension by default
// (hidden = 0 picks the feature width). Adam optimizer, full batch.
MlpResult train_mlp(const AttackDataset& ds, size_t hidden = 0, size_t epochs = 1000,
                    uint64_t seed = 1, double learning_rate = 0.01, size_t curve_stride = 1);

std::string training_curve_csv(const std::vector<CurvePoint>& curve);

std::string attack_report_json(const LrResult& lr, const MlpResult& mlp);

}  // namespace meshauth
