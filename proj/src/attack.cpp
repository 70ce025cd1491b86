#include "meshauth/attack.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "meshauth/fabric.hpp"

namespace meshauth {

namespace {

Eigen::VectorXd to_feature_row(const BitVec& ch, const DeviceModel& dev, FeatureMode mode) {
    std::vector<double> feats;
    switch (mode) {
        case FeatureMode::Raw:
            feats.reserve(ch.size() + 1);
            for (uint8_t b : ch) feats.push_back(b ? -1.0 : 1.0);
            feats.push_back(1.0);
            break;
        case FeatureMode::Phi: feats = phi_map(ch); break;
        case FeatureMode::Lifted: feats = lift_features(phi_map(ch), dev.tap_pairs()); break;
    }
    return Eigen::Map<Eigen::VectorXd>(feats.data(), static_cast<Eigen::Index>(feats.size()));
}

// Deployed-mode labels: 32-bit windows of voted bits pushed through the
// avalanche combiner; a label depends on its whole window, never on a single
// raw response bit.
BitVec combiner_labels(const BitVec& voted) {
    BitVec out(voted.size());
    for (size_t base = 0; base < voted.size(); base += 32) {
        uint32_t word = 0;
        for (size_t i = 0; i < 32; ++i) {
            uint8_t b = base + i < voted.size() ? voted[base + i] : 0;
            word = (word << 1) | b;
        }
        uint32_t mixed = diffuse32(word);
        for (size_t i = 0; i < 32 && base + i < voted.size(); ++i)
            out[base + i] = (mixed >> (31 - i)) & 1u;
    }
    return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double accuracy_of(const Eigen::VectorXd& scores, const Eigen::VectorXd& y) {
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        hits += (scores[i] > 0.5 ? 1.0 : 0.0) == y[i];
    return static_cast<double>(hits) / scores.size();
}

}  // namespace

AttackDataset AttackDataset::build(const DeviceModel& dev, size_t train_count, size_t test_count,
                                   FeatureMode features, ExposureMode exposure, uint64_t seed,
                                   size_t repetitions) {
    AttackDataset ds;
    ds.features_ = features;
    ds.exposure_ = exposure;

    const size_t total = train_count + test_count;
    Rng ch_rng(seed, 0xa77ac4);
    Rng noise(seed, 0xa77ac5);
    std::vector<BitVec> challenges;
    std::set<Bytes> seen;
    challenges.reserve(total);
    while (challenges.size() < total) {
        BitVec ch = random_challenge(dev.n_stages(), ch_rng);
        if (seen.insert(pack_bits_msb(ch)).second) challenges.push_back(std::move(ch));
    }

    BitVec voted(total);
    for (size_t i = 0; i < total; ++i) {
        auto feats = lift_features(phi_map(challenges[i]), dev.tap_pairs());
        voted[i] = majority_vote(dev, feats, repetitions, noise).bit;
    }

    BitVec raw_train(voted.begin(), voted.begin() + train_count);
    BitVec raw_test(voted.begin() + train_count, voted.end());
    BitVec label_train, label_test;
    if (exposure == ExposureMode::Oracle) {
        label_train = raw_train;
        label_test = raw_test;
        ds.raw_train_ = raw_train;
        ds.raw_test_ = raw_test;
    } else {
        // Raw bits stay inside this scope; only combiner symbols survive.
        label_train = combiner_labels(raw_train);
        label_test = combiner_labels(raw_test);
    }

    Eigen::VectorXd probe = to_feature_row(challenges[0], dev, features);
    ds.x_train_.resize(train_count, probe.size());
    ds.x_test_.resize(test_count, probe.size());
    ds.y_train_.resize(train_count);
    ds.y_test_.resize(test_count);
    for (size_t i = 0; i < train_count; ++i) {
        ds.x_train_.row(i) = to_feature_row(challenges[i], dev, features);
        ds.y_train_[i] = label_train[i];
    }
    for (size_t i = 0; i < test_count; ++i) {
        ds.x_test_.row(i) = to_feature_row(challenges[train_count + i], dev, features);
        ds.y_test_[i] = label_test[i];
    }
    return ds;
}

const BitVec& AttackDataset::raw_train_bits() const {
    if (exposure_ == ExposureMode::Deployed)
        throw std::logic_error("attack dataset: raw response bits are withheld in deployed mode");
    return raw_train_;
}

const BitVec& AttackDataset::raw_test_bits() const {
    if (exposure_ == ExposureMode::Deployed)
        throw std::logic_error("attack dataset: raw response bits are withheld in deployed mode");
    return raw_test_;
}

void AttackDataset::shuffle_labels(Rng& rng) {
    for (Eigen::Index i = 0; i < y_train_.size(); ++i) y_train_[i] = rng.next_bit() ? 1.0 : 0.0;
    for (Eigen::Index i = 0; i < y_test_.size(); ++i) y_test_[i] = rng.next_bit() ? 1.0 : 0.0;
}

double roc_auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("roc_auc: size mismatch");
    size_t pos = 0, neg = 0;
    for (uint8_t l : labels) (l ? pos : neg) += 1;
    if (pos == 0 || neg == 0) throw std::invalid_argument("roc_auc: one-class labels");

    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    // Threshold sweep from +inf down; trapezoids between distinct scores.
    double auc = 0.0;
    double tpr_prev = 0.0, fpr_prev = 0.0;
    size_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        double tpr = static_cast<double>(tp) / pos;
        double fpr = static_cast<double>(fp) / neg;
        auc += (fpr - fpr_prev) * (tpr + tpr_prev) / 2.0;
        tpr_prev = tpr;
        fpr_prev = fpr;
    }
    return auc;
}

LrResult train_logistic_regression(const AttackDataset& ds, size_t max_epochs,
                                   double learning_rate) {
    const Eigen::MatrixXd& x = ds.x_train();
    const Eigen::VectorXd& y = ds.y_train();
    const double n = static_cast<double>(x.rows());

    LrResult r;
    r.weights = Eigen::VectorXd::Zero(x.cols());
    double prev_loss = 1e300;
    size_t plateau = 0;
    for (size_t epoch = 0; epoch < max_epochs; ++epoch) {
        Eigen::VectorXd z = x * r.weights;
        Eigen::VectorXd p = z.unaryExpr([](double v) { return sigmoid(v); });
        Eigen::VectorXd grad = x.transpose() * (p - y) / n;
        r.weights -= learning_rate * grad;
        double loss = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            double pi = std::min(std::max(p[i], 1e-12), 1.0 - 1e-12);
            loss += y[i] ? -std::log(pi) : -std::log(1.0 - pi);
        }
        loss /= n;
        r.epochs_run = epoch + 1;
        plateau = std::abs(prev_loss - loss) < 1e-7 ? plateau + 1 : 0;
        prev_loss = loss;
        if (plateau >= 5) break;
    }

    Eigen::VectorXd ptr = (x * r.weights).unaryExpr([](double v) { return sigmoid(v); });
    r.train_accuracy = accuracy_of(ptr, y);
    Eigen::VectorXd pte =
        (ds.x_test() * r.weights).unaryExpr([](double v) { return sigmoid(v); });
    r.test_accuracy = accuracy_of(pte, ds.y_test());

    std::vector<double> scores(pte.data(), pte.data() + pte.size());
    std::vector<uint8_t> labels(ds.y_test().size());
    for (Eigen::Index i = 0; i < ds.y_test().size(); ++i)
        labels[i] = ds.y_test()[i] > 0.5 ? 1 : 0;
    r.auc = roc_auc(scores, labels);
    return r;
}

MlpResult train_mlp(const AttackDataset& ds, size_t hidden, size_t epochs, uint64_t seed,
                    double learning_rate, size_t curve_stride) {
    const Eigen::MatrixXd& x = ds.x_train();
    const Eigen::VectorXd& y = ds.y_train();
    const Eigen::Index d = x.cols();
    const Eigen::Index h = hidden == 0 ? d : static_cast<Eigen::Index>(hidden);
    const double n = static_cast<double>(x.rows());

    Rng rng(seed, 0x313a9);
    auto init = [&rng](Eigen::Index rows, Eigen::Index cols, double scale) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.next_gaussian();
        return m;
    };
    Eigen::MatrixXd w1 = init(d, h, 1.0 / std::sqrt(static_cast<double>(d)));
    Eigen::RowVectorXd b1 = Eigen::RowVectorXd::Zero(h);
    Eigen::VectorXd w2 = init(h, 1, 1.0 / std::sqrt(static_cast<double>(h)));
    double b2 = 0.0;

    // Adam state
    Eigen::MatrixXd mw1 = Eigen::MatrixXd::Zero(d, h), vw1 = mw1;
    Eigen::RowVectorXd mb1 = Eigen::RowVectorXd::Zero(h), vb1 = mb1;
    Eigen::VectorXd mw2 = Eigen::VectorXd::Zero(h), vw2 = mw2;
    double mb2 = 0.0, vb2 = 0.0;
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    auto forward = [&](const Eigen::MatrixXd& xin) {
        Eigen::MatrixXd hidden_act = ((xin * w1).rowwise() + b1).array().tanh().matrix();
        Eigen::VectorXd out = (hidden_act * w2).array() + b2;
        return std::make_pair(hidden_act, out);
    };

    MlpResult r;
    for (size_t epoch = 0; epoch < epochs; ++epoch) {
        auto [a1, z2] = forward(x);
        Eigen::VectorXd p = z2.unaryExpr([](double v) { return sigmoid(v); });
        if (!p.allFinite()) {
            r.diverged = true;
            break;
        }
        Eigen::VectorXd dz2 = (p - y) / n;
        Eigen::VectorXd gw2 = a1.transpose() * dz2;
        double gb2 = dz2.sum();
        Eigen::MatrixXd da1 =
            (dz2 * w2.transpose()).cwiseProduct((1.0 - a1.array().square()).matrix());
        Eigen::MatrixXd gw1 = x.transpose() * da1;
        Eigen::RowVectorXd gb1 = da1.colwise().sum();

        const double t = static_cast<double>(epoch + 1);
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        auto adam = [&](auto& w, auto& m, auto& v, const auto& g) {
            m = beta1 * m + (1.0 - beta1) * g;
            v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
            w -= learning_rate * (m / bc1).cwiseQuotient(((v / bc2).cwiseSqrt().array() + eps).matrix());
        };
        adam(w1, mw1, vw1, gw1);
        adam(w2, mw2, vw2, gw2);
        mb1 = beta1 * mb1 + (1.0 - beta1) * gb1;
        vb1 = beta2 * vb1 + (1.0 - beta2) * gb1.cwiseProduct(gb1);
        b1 -= learning_rate *
              (mb1 / bc1).cwiseQuotient(((vb1 / bc2).cwiseSqrt().array() + eps).matrix());
        mb2 = beta1 * mb2 + (1.0 - beta1) * gb2;
        vb2 = beta2 * vb2 + (1.0 - beta2) * gb2 * gb2;
        b2 -= learning_rate * (mb2 / bc1) / (std::sqrt(vb2 / bc2) + eps);

        if (epoch % curve_stride == 0 || epoch + 1 == epochs) {
            Eigen::VectorXd ptr = p;
            auto [a1t, z2t] = forward(ds.x_test());
            Eigen::VectorXd pte = z2t.unaryExpr([](double v) { return sigmoid(v); });
            CurvePoint pt;
            pt.epoch = epoch + 1;
            pt.train_accuracy = accuracy_of(ptr, y);
            pt.test_accuracy = accuracy_of(pte, ds.y_test());
            r.curve.push_back(pt);
            r.train_accuracy = pt.train_accuracy;
            r.test_accuracy = pt.test_accuracy;
        }
    }
    if (epochs == 0) {
        auto [a1, z2] = forward(x);
        Eigen::VectorXd p = z2.unaryExpr([](double v) { return sigmoid(v); });
        auto [a1t, z2t] = forward(ds.x_test());
        Eigen::VectorXd pte = z2t.unaryExpr([](double v) { return sigmoid(v); });
        r.train_accuracy = accuracy_of(p, y);
        r.test_accuracy = accuracy_of(pte, ds.y_test());
    }
    return r;
}

std::string training_curve_csv(const std::vector<CurvePoint>& curve) {
    std::ostringstream os;
    os << "epoch,train_acc,test_acc\n";
    for (const auto& p : curve)
        os << p.epoch << ',' << p.train_accuracy << ',' << p.test_accuracy << '\n';
    return os.str();
}

std::string attack_report_json(const LrResult& lr, const MlpResult& mlp) {
    nlohmann::ordered_json j;
    j["lr_accuracy"] = lr.test_accuracy;
    j["lr_auc"] = lr.auc;
    j["lr_epochs"] = lr.epochs_run;
    j["mlp_train_accuracy"] = mlp.train_accuracy;
    j["mlp_test_accuracy"] = mlp.test_accuracy;
    j["mlp_diverged"] = mlp.diverged;
    return j.dump(2);
}

}  // namespace meshauth
