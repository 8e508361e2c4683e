#pragma once

// Dense Hermitian eigensolver (cyclic complex Jacobi) plus the localization
// diagnostics used on effective chains.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "omtopo/error.hpp"
#include "omtopo/matrix.hpp"
#include "omtopo/model.hpp"

namespace omtopo {

struct SpectrumResult {
    std::vector<double> eigenvalues;              ///< ascending
    std::vector<std::vector<cplx>> eigenvectors;  ///< eigenvectors[k] pairs with eigenvalues[k]
    std::vector<std::size_t> gap_state_indices;   ///< filled by gap_states / chain_spectrum
};

namespace detail {

inline double off_diagonal_max(const SquareMatrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) m = std::max(m, std::abs(a(i, j)));
    return m;
}

inline double frobenius(const SquareMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

/// Largest-magnitude component made real positive; ties go to the lowest index.
inline void fix_phase(std::vector<cplx>& v) {
    double best = 0.0;
    for (const auto& z : v) best = std::max(best, std::abs(z));
    if (best == 0.0) return;
    std::size_t pick = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) >= best * (1.0 - 1e-12)) {
            pick = i;
            break;
        }
    const cplx phase = std::conj(v[pick]) / std::abs(v[pick]);
    for (auto& z : v) z *= phase;
    v[pick] = {std::abs(v[pick]), 0.0};
}

} // namespace detail

/// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Each rotation first removes the phase of the pivot a_pq (a diagonal unitary on
/// column q) and then applies a real Givens rotation that zeroes it, so the
/// accumulated transform is exactly unitary up to rounding. Pivots that are
/// already exactly zero are skipped, which keeps decoupled sites untouched.
inline SpectrumResult eigh(const SquareMatrix& h) {
    const std::size_t n = h.size();
    const double scale = std::max(1.0, h.max_abs());
    if (h.hermiticity_defect() > 1e-12 * scale) throw InvalidArgument("eigh: matrix is not Hermitian");

    SquareMatrix a = h;
    for (std::size_t i = 0; i < n; ++i) a(i, i) = {a(i, i).real(), 0.0};
    SquareMatrix v(n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    const double fro = detail::frobenius(a);
    constexpr int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const double off = detail::off_diagonal_max(a);
        if (off == 0.0 || off <= 1e-18 * fro) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double r = std::abs(apq);
                if (r == 0.0) continue;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                // After the sweeps have converged, entries below rounding of both
                // diagonals are noise.
                if (sweep > 3 && std::abs(app) + 100.0 * r == std::abs(app) &&
                    std::abs(aqq) + 100.0 * r == std::abs(aqq)) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const cplx ph = apq / r; // e^{i phi}
                const double theta = (aqq - app) / (2.0 * r);
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // G restricted to (p,q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                const cplx gqp = -s * std::conj(ph);
                const cplx gqq = c * std::conj(ph);
                for (std::size_t k = 0; k < n; ++k) { // A <- A G
                    const cplx akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp + gqp * akq;
                    a(k, q) = s * akp + gqq * akq;
                }
                for (std::size_t k = 0; k < n; ++k) { // A <- G^H A
                    const cplx apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk + std::conj(gqp) * aqk;
                    a(q, k) = s * apk + std::conj(gqq) * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                a(p, p) = {a(p, p).real(), 0.0};
                a(q, q) = {a(q, q).real(), 0.0};
                for (std::size_t k = 0; k < n; ++k) { // V <- V G
                    const cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp + gqp * vkq;
                    v(k, q) = s * vkp + gqq * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

    SpectrumResult out;
    out.eigenvalues.reserve(n);
    out.eigenvectors.reserve(n);
    for (std::size_t k : order) {
        out.eigenvalues.push_back(a(k, k).real());
        std::vector<cplx> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = v(i, k);
        detail::fix_phase(col);
        out.eigenvectors.push_back(std::move(col));
    }
    return out;
}

/// Indices of the states nearest zero energy: two for an even chain, one (the
/// chiral zero mode) for an odd chain. Ascending index order.
inline std::vector<std::size_t> gap_states(const SpectrumResult& r, const EffectiveChain& chain) {
    const std::size_t want = chain.num_sites() % 2 == 0 ? 2 : 1;
    std::vector<std::size_t> idx(r.eigenvalues.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(r.eigenvalues[x]) < std::abs(r.eigenvalues[y]);
    });
    idx.resize(std::min(want, idx.size()));
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// eigh(build_hamiltonian(chain)) with gap states filled in.
inline SpectrumResult chain_spectrum(const EffectiveChain& chain) {
    SpectrumResult r = eigh(build_hamiltonian(chain));
    r.gap_state_indices = gap_states(r, chain);
    return r;
}

inline double norm_squared(std::span<const cplx> v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return s;
}

namespace detail {
inline void require_unit(std::span<const cplx> v, const char* who) {
    if (v.empty() || std::abs(norm_squared(v) - 1.0) > 1e-8)
        throw InvalidArgument(std::string(who) + ": vector is not normalized");
}
} // namespace detail

/// |v_1|^2 + |v_M|^2
inline double edge_weight(std::span<const cplx> v) {
    detail::require_unit(v, "edge_weight");
    if (v.size() == 1) return std::norm(v.front());
    return std::norm(v.front()) + std::norm(v.back());
}

/// Inverse participation ratio sum |v_i|^4.
inline double ipr(std::span<const cplx> v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z) * std::norm(z);
    return s;
}

inline std::vector<double> site_weights(std::span<const cplx> v) {
    std::vector<double> w(v.size());
    std::transform(v.begin(), v.end(), w.begin(), [](const cplx& z) { return std::norm(z); });
    return w;
}

/// Replace each bond by its magnitude with the canonical sign pattern -,+,-,+,...
/// A nearest-neighbour chain is a tree, so this is a pure gauge transformation.
inline EffectiveChain gauge_fix(const EffectiveChain& chain) {
    EffectiveChain out = chain;
    for (std::size_t i = 0; i < out.couplings.size(); ++i) {
        const double m = std::abs(chain.couplings[i]);
        out.couplings[i] = i % 2 == 0 ? -m : m;
    }
    out.gauge_fixed = true;
    return out;
}

} // namespace omtopo
