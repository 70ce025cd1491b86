#include "meshauth/mesh.hpp"

#include <algorithm>
#include <stdexcept>

namespace meshauth {

namespace {

// Monotone staircase path from source toward sink; the move order is a
// seeded shuffle of the required row/col steps. Returns alternating
// tile, link, tile, ... element ids.
std::vector<uint32_t> staircase_path(const MeshTopology& mesh, uint32_t source, uint32_t sink,
                                     Rng& rng) {
    size_t cols = mesh.cols();
    long r = long(source / cols), c = long(source % cols);
    long rt = long(sink / cols), ct = long(sink % cols);
    std::vector<uint8_t> moves;  // 0 = step in row direction, 1 = step in col direction
    for (long i = 0; i < std::labs(rt - r); ++i) moves.push_back(0);
    for (long i = 0; i < std::labs(ct - c); ++i) moves.push_back(1);
    for (size_t i = moves.size(); i > 1; --i) {
        size_t j = rng.next_below(i);
        std::swap(moves[i - 1], moves[j]);
    }
    int dr = rt > r ? 1 : -1;
    int dc = ct > c ? 1 : -1;
    std::vector<uint32_t> path;
    path.push_back(mesh.tile_id(size_t(r), size_t(c)));
    for (uint8_t m : moves) {
        if (m == 0) {
            size_t top = size_t(dr > 0 ? r : r - 1);
            path.push_back(mesh.v_link_id(top, size_t(c)));
            r += dr;
        } else {
            size_t left = size_t(dc > 0 ? c : c - 1);
            path.push_back(mesh.h_link_id(size_t(r), left));
            c += dc;
        }
        path.push_back(mesh.tile_id(size_t(r), size_t(c)));
    }
    return path;
}

}  // namespace

std::vector<PathPair> enumerate_path_pairs(const MeshTopology& mesh, size_t pair_count,
                                           size_t hop_min, size_t hop_max, uint64_t seed) {
    if (hop_min > hop_max || hop_min > mesh.max_distance())
        throw std::invalid_argument("enumerate_path_pairs: infeasible hop range for this mesh");
    // Straight-line pairs admit only one monotone path; require a bend.
    Rng rng(seed, 0x9a1f5u);
    std::vector<PathPair> out;
    out.reserve(pair_count * 8);
    for (size_t p = 0; p < pair_count; ++p) {
        uint32_t src = 0, dst = 0;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 100000)
                throw std::invalid_argument("enumerate_path_pairs: infeasible hop range for this mesh");
            src = static_cast<uint32_t>(rng.next_below(mesh.tile_count()));
            dst = static_cast<uint32_t>(rng.next_below(mesh.tile_count()));
            size_t d = mesh.manhattan(src, dst);
            if (d < hop_min || d > hop_max) continue;
            size_t dr = (src / mesh.cols() > dst / mesh.cols()) ? src / mesh.cols() - dst / mesh.cols()
                                                                : dst / mesh.cols() - src / mesh.cols();
            if (dr == 0 || dr == d) continue;  // straight line, no alternative routes
            break;
        }
        for (uint32_t perm = 0; perm < 8; ++perm) {
            PathPair pp;
            pp.source = src;
            pp.sink = dst;
            pp.pair_index = static_cast<uint32_t>(p);
            pp.permutation_index = perm;
            Rng path_rng = rng.split((uint64_t(p) << 8) | perm);
            pp.path_a = staircase_path(mesh, src, dst, path_rng);
            do {
                pp.path_b = staircase_path(mesh, src, dst, path_rng);
            } while (pp.path_b == pp.path_a);
            out.push_back(std::move(pp));
        }
    }
    return out;
}

}  // namespace meshauth
