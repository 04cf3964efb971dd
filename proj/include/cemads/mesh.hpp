#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "cemads/blackbox.hpp"

// Mesh machinery. All trial points are rounded onto a per-coordinate
// lattice anchored at the current frame center; the poll step explores a
// frame of per-coordinate radius Delta around that center. On a failed
// iteration both sizes shrink, with the mesh size decreasing quadratically
// relative to the poll size so that poll directions grow asymptotically
// dense.

namespace cemads {

using Rng = std::mt19937_64;

struct MeshState {
    Vec delta;       // mesh size, per coordinate (> 0)
    Vec Delta;       // poll (frame) size, per coordinate (>= delta)
    Vec Delta_init;  // growth cap
    Vec center;      // current frame center

    std::size_t dim() const { return delta.size(); }
};

namespace detail {
inline double coupled_mesh_size(double Delta) {
    return std::min(Delta, Delta * Delta);
}
}  // namespace detail

/// Initial sizes: Delta_i spans a tenth of the bound box (1.0 when a bound
/// is infinite), delta_i = min(Delta_i, Delta_i^2). A start point outside
/// finite bounds is clamped; *clamped reports whether that happened.
inline MeshState init_mesh(const Problem& p, const Vec& x0, bool* clamped = nullptr) {
    if (static_cast<int>(x0.size()) != p.n)
        throw std::invalid_argument("init_mesh: start point dimension mismatch");
    MeshState ms;
    ms.center = clamp_to_bounds(p.bounds, x0);
    if (clamped) *clamped = (ms.center != x0);
    ms.Delta.resize(p.n);
    ms.delta.resize(p.n);
    for (int i = 0; i < p.n; ++i) {
        const double lo = p.bounds.lower[i], hi = p.bounds.upper[i];
        ms.Delta[i] = (std::isfinite(lo) && std::isfinite(hi)) ? (hi - lo) / 10.0 : 1.0;
        if (ms.Delta[i] <= 0.0) ms.Delta[i] = 1.0;  // degenerate box
        ms.delta[i] = detail::coupled_mesh_size(ms.Delta[i]);
    }
    ms.Delta_init = ms.Delta;
    return ms;
}

/// Round x onto the mesh anchored at the frame center. Idempotent.
inline Vec project(const MeshState& ms, const Vec& x) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = ms.center[i] + ms.delta[i] * std::round((x[i] - ms.center[i]) / ms.delta[i]);
    }
    return out;
}

/// Round x onto the mesh, then pull any coordinate that landed outside the
/// box back to the nearest interior mesh point. Requires the frame center
/// to lie within the box (always true for engine-generated states).
inline Vec project_into_box(const MeshState& ms, const BoundBox& b, const Vec& x) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double c = ms.center[i], d = ms.delta[i];
        double z = std::round((x[i] - c) / d);
        double v = c + d * z;
        if (v > b.upper[i]) {
            z = std::floor((b.upper[i] - c) / d);
            v = c + d * z;
        }
        if (v < b.lower[i]) {
            z = std::ceil((b.lower[i] - c) / d);
            v = c + d * z;
        }
        out[i] = v;
    }
    return out;
}

namespace detail {

inline Vec unit_sphere_draw(std::size_t n, Rng& rng) {
    Vec v(n);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& vi : v) {
            std::normal_distribution<double> nd(0.0, 1.0);
            vi = nd(rng);
            norm2 += vi * vi;
        }
    } while (norm2 < 1e-300);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& vi : v) vi *= inv;
    return v;
}

// Rank of an n x n integer direction matrix via Gaussian elimination.
inline std::size_t rank(std::vector<Vec> cols) {
    const std::size_t n = cols.empty() ? 0 : cols.front().size();
    std::size_t r = 0;
    for (std::size_t col = 0; col < cols.size() && r < n; ++col) {
        std::size_t piv = r;
        for (std::size_t i = r; i < n; ++i)
            if (std::fabs(cols[col][i]) > std::fabs(cols[col][piv])) piv = i;
        if (std::fabs(cols[col][piv]) < 1e-12) continue;
        for (auto& c : cols) std::swap(c[r], c[piv]);
        for (std::size_t j = col + 1; j < cols.size(); ++j) {
            const double factor = cols[j][r] / cols[col][r];
            for (std::size_t i = r; i < n; ++i) cols[j][i] -= factor * cols[col][i];
        }
        ++r;
    }
    return r;
}

}  // namespace detail

/// 2n poll directions in mesh units: the columns of a random Householder
/// matrix, scaled per coordinate so that |d_i| * delta_i <= Delta_i, plus
/// their negations. Poll points center + delta .* d land on the mesh by
/// construction.
inline std::vector<Vec> poll_directions(const MeshState& ms, Rng& rng) {
    const std::size_t n = ms.dim();
    std::vector<Vec> basis;
    for (int attempt = 0; attempt < 10; ++attempt) {
        const Vec v = detail::unit_sphere_draw(n, rng);
        basis.assign(n, Vec(n, 0.0));
        for (std::size_t j = 0; j < n; ++j) {
            // column j of H = I - 2 v v^T
            double maxabs = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                basis[j][i] = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * v[j];
                maxabs = std::max(maxabs, std::fabs(basis[j][i]));
            }
            for (std::size_t i = 0; i < n; ++i) {
                const double ratio = std::max(1.0, std::floor(ms.Delta[i] / ms.delta[i]));
                double d = std::round(basis[j][i] / maxabs * ratio);
                d = std::clamp(d, -ratio, ratio);
                basis[j][i] = d;
            }
            bool zero = true;
            for (double d : basis[j])
                if (d != 0.0) zero = false;
            if (zero) basis[j][j] = 1.0;
        }
        if (detail::rank(basis) == n) break;
        basis.clear();
    }
    if (basis.empty()) {
        // coordinate fallback, always full rank
        basis.assign(n, Vec(n, 0.0));
        for (std::size_t j = 0; j < n; ++j)
            basis[j][j] = std::max(1.0, std::floor(ms.Delta[j] / ms.delta[j]));
    }
    std::vector<Vec> dirs = basis;
    for (const auto& d : basis) {
        Vec neg(n);
        for (std::size_t i = 0; i < n; ++i) neg[i] = -d[i];
        dirs.push_back(std::move(neg));
    }
    return dirs;
}

enum class IterationResult { success, failure };

/// Halve the frame on failure, double it (capped at the initial size) on
/// success; the mesh size stays coupled at min(Delta, Delta^2).
inline MeshState update_sizes(MeshState ms, IterationResult outcome) {
    for (std::size_t i = 0; i < ms.dim(); ++i) {
        if (outcome == IterationResult::failure)
            ms.Delta[i] *= 0.5;
        else
            ms.Delta[i] = std::min(2.0 * ms.Delta[i], ms.Delta_init[i]);
        ms.delta[i] = detail::coupled_mesh_size(ms.Delta[i]);
    }
    return ms;
}

inline double max_poll_size(const MeshState& ms) {
    double mx = 0.0;
    for (double d : ms.Delta) mx = std::max(mx, d);
    return mx;
}

}  // namespace cemads
