#include "meshauth/router.hpp"

#include <stdexcept>

namespace meshauth {

RouterConfig::RouterConfig(uint64_t config_id, size_t n) : config_id_(config_id), n_(n) {
    Rng perm_rng(config_id, 1);
    permutation_.resize(n);
    for (size_t i = 0; i < n; ++i) permutation_[i] = i;
    for (size_t i = n; i > 1; --i) {
        size_t j = perm_rng.next_below(i);
        std::swap(permutation_[i - 1], permutation_[j]);
    }
    inverse_permutation_.resize(n);
    for (size_t i = 0; i < n; ++i) inverse_permutation_[permutation_[i]] = i;

    Rng pol_rng(config_id, 2);
    polarity_.resize(n);
    for (size_t i = 0; i < n; ++i) polarity_[i] = pol_rng.next_below(16) == 0 ? 1 : 0;

    // Band-limited LU product: weak coupling between neighboring links only.
    Rng mix_rng(config_id, 3);
    mixing_ = Gf2Matrix::random_invertible(n, mix_rng, 0.75, 2);
    mixing_inv_ = mixing_.inverse();
}

BitVec RouterConfig::wrap_challenge(const BitVec& raw) const {
    if (raw.size() != n_) throw std::invalid_argument("wrap_challenge: length mismatch");
    BitVec mixed = mixing_.mul_vec(raw);
    for (size_t i = 0; i < n_; ++i) mixed[i] ^= polarity_[i];
    BitVec out(n_);
    for (size_t i = 0; i < n_; ++i) out[permutation_[i]] = mixed[i];
    return out;
}

BitVec RouterConfig::unwrap_challenge(const BitVec& wrapped) const {
    if (wrapped.size() != n_) throw std::invalid_argument("unwrap_challenge: length mismatch");
    BitVec mixed(n_);
    for (size_t i = 0; i < n_; ++i) mixed[i] = wrapped[permutation_[i]];
    for (size_t i = 0; i < n_; ++i) mixed[i] ^= polarity_[i];
    return mixing_inv_.mul_vec(mixed);
}

InputHash::InputHash(Gf2Matrix h) : h_(std::move(h)) {
    if (!h_.is_invertible()) throw std::domain_error("InputHash: singular matrix rejected");
    h_inv_ = h_.inverse();
}

InputHash InputHash::random(size_t n, uint64_t seed) {
    Rng rng(seed, 0x1a5bu);
    return InputHash(Gf2Matrix::random_invertible(n, rng, 0.5, 0));
}

}  // namespace meshauth
