#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshauth/bits.hpp"
#include "meshauth/rng.hpp"

namespace meshauth {

// Manhattan mesh of router tiles with bidirectional neighbor links.
// Path elements are numbered so tiles and links share one id space:
// tile (r,c) -> r*cols + c; the link leaving tile t horizontally is
// tiles + 2t, vertically tiles + 2t + 1.
class MeshTopology {
public:
    MeshTopology(size_t rows, size_t cols) : rows_(rows), cols_(cols) {}

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    size_t tile_count() const { return rows_ * cols_; }

    uint32_t tile_id(size_t r, size_t c) const { return static_cast<uint32_t>(r * cols_ + c); }
    uint32_t h_link_id(size_t r, size_t c) const {
        return static_cast<uint32_t>(tile_count() + 2 * (r * cols_ + c));
    }
    uint32_t v_link_id(size_t r, size_t c) const {
        return static_cast<uint32_t>(tile_count() + 2 * (r * cols_ + c) + 1);
    }

    size_t manhattan(uint32_t a, uint32_t b) const {
        size_t ra = a / cols_, ca = a % cols_;
        size_t rb = b / cols_, cb = b % cols_;
        return (ra > rb ? ra - rb : rb - ra) + (ca > cb ? ca - cb : cb - ca);
    }

    size_t max_distance() const { return rows_ - 1 + cols_ - 1; }

private:
    size_t rows_;
    size_t cols_;
};

// One A/B race candidate: two equal-length monotone paths between the same
// source and sink, plus the permutation slot the candidate occupies.
struct PathPair {
    uint32_t source = 0;
    uint32_t sink = 0;
    uint32_t pair_index = 0;        // which source-sink pair
    uint32_t permutation_index = 0;  // in [0, 8)
    std::vector<uint32_t> path_a;    // alternating tile, link, tile, ...
    std::vector<uint32_t> path_b;

    // Effective stage depth: tile sites on the path plus links traversed.
    size_t stage_depth() const { return path_a.size(); }
    size_t tile_stages() const { return (path_a.size() + 1) / 2; }

    std::string pair_id() const {
        return std::to_string(source) + "-" + std::to_string(sink) + "/" +
               std::to_string(permutation_index);
    }

    PathPair swapped() const {
        PathPair p(*this);
        std::swap(p.path_a, p.path_b);
        return p;
    }
};

// Deterministically selects `pair_count` source-sink pairs with Manhattan
// distance in [hop_min, hop_max] and emits 8 path permutations per pair,
// so the candidate count is pair_count * 8.
std::vector<PathPair> enumerate_path_pairs(const MeshTopology& mesh, size_t pair_count,
                                           size_t hop_min, size_t hop_max, uint64_t seed);

}  // namespace meshauth
