#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "meshauth/bits.hpp"
#include "meshauth/rng.hpp"

namespace meshauth {

// Dense square matrix over GF(2), rows packed into 64-bit words.
class Gf2Matrix {
public:
    Gf2Matrix() : n_(0), words_(0) {}
    explicit Gf2Matrix(size_t n) : n_(n), words_((n + 63) / 64), rows_(n * ((n + 63) / 64), 0) {}

    static Gf2Matrix identity(size_t n) {
        Gf2Matrix m(n);
        for (size_t i = 0; i < n; ++i) m.set(i, i, true);
        return m;
    }

    size_t size() const { return n_; }

    bool get(size_t r, size_t c) const { return (rows_[r * words_ + c / 64] >> (c % 64)) & 1u; }

    void set(size_t r, size_t c, bool v) {
        uint64_t mask = 1ULL << (c % 64);
        if (v)
            rows_[r * words_ + c / 64] |= mask;
        else
            rows_[r * words_ + c / 64] &= ~mask;
    }

    void xor_row(size_t dst, size_t src) {
        for (size_t w = 0; w < words_; ++w) rows_[dst * words_ + w] ^= rows_[src * words_ + w];
    }

    BitVec mul_vec(const BitVec& x) const {
        if (x.size() != n_) throw std::invalid_argument("Gf2Matrix::mul_vec: dimension mismatch");
        std::vector<uint64_t> xw(words_, 0);
        for (size_t i = 0; i < n_; ++i)
            if (x[i]) xw[i / 64] |= 1ULL << (i % 64);
        BitVec y(n_);
        for (size_t r = 0; r < n_; ++r) {
            uint64_t acc = 0;
            for (size_t w = 0; w < words_; ++w) acc ^= rows_[r * words_ + w] & xw[w];
            y[r] = static_cast<uint8_t>(__builtin_parityll(acc));
        }
        return y;
    }

    Gf2Matrix mul(const Gf2Matrix& other) const {
        if (other.n_ != n_) throw std::invalid_argument("Gf2Matrix::mul: dimension mismatch");
        Gf2Matrix out(n_);
        for (size_t r = 0; r < n_; ++r) {
            for (size_t c = 0; c < n_; ++c) {
                if (!get(r, c)) continue;
                for (size_t w = 0; w < words_; ++w)
                    out.rows_[r * words_ + w] ^= other.rows_[c * words_ + w];
            }
        }
        return out;
    }

    size_t rank() const {
        Gf2Matrix m(*this);
        size_t rank = 0;
        for (size_t col = 0; col < n_ && rank < n_; ++col) {
            size_t pivot = rank;
            while (pivot < n_ && !m.get(pivot, col)) ++pivot;
            if (pivot == n_) continue;
            if (pivot != rank) m.swap_rows(pivot, rank);
            for (size_t r = 0; r < n_; ++r)
                if (r != rank && m.get(r, col)) m.xor_row(r, rank);
            ++rank;
        }
        return rank;
    }

    // Gauss-Jordan inverse; throws if singular.
    Gf2Matrix inverse() const {
        Gf2Matrix m(*this);
        Gf2Matrix inv = identity(n_);
        for (size_t col = 0; col < n_; ++col) {
            size_t pivot = col;
            while (pivot < n_ && !m.get(pivot, col)) ++pivot;
            if (pivot == n_) throw std::domain_error("Gf2Matrix::inverse: singular matrix");
            if (pivot != col) {
                m.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            for (size_t r = 0; r < n_; ++r) {
                if (r != col && m.get(r, col)) {
                    m.xor_row(r, col);
                    inv.xor_row(r, col);
                }
            }
        }
        return inv;
    }

    bool is_invertible() const { return rank() == n_; }

    // Product of a random unit-lower-triangular and unit-upper-triangular
    // matrix, invertible by construction. Off-diagonal fill is band-limited
    // (|i-j| <= band) with the given per-entry density.
    static Gf2Matrix random_invertible(size_t n, Rng& rng, double density = 0.5, size_t band = 0) {
        Gf2Matrix lower = identity(n);
        Gf2Matrix upper = identity(n);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < i; ++j) {
                if (band != 0 && i - j > band) continue;
                if (rng.next_double() < density) lower.set(i, j, true);
            }
            for (size_t j = i + 1; j < n; ++j) {
                if (band != 0 && j - i > band) continue;
                if (rng.next_double() < density) upper.set(i, j, true);
            }
        }
        return lower.mul(upper);
    }

    bool operator==(const Gf2Matrix& o) const { return n_ == o.n_ && rows_ == o.rows_; }

private:
    void swap_rows(size_t a, size_t b) {
        for (size_t w = 0; w < words_; ++w)
            std::swap(rows_[a * words_ + w], rows_[b * words_ + w]);
    }

    size_t n_;
    size_t words_;
    std::vector<uint64_t> rows_;
};

}  // namespace meshauth
