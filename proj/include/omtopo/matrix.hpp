#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace omtopo {

using cplx = std::complex<double>;

/// Dense row-major complex square matrix. Sizes here never exceed a few dozen.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n) : n_(n), data_(n * n) {}

    std::size_t size() const noexcept { return n_; }

    cplx& operator()(std::size_t i, std::size_t j) {
        assert(i < n_ && j < n_);
        return data_[i * n_ + j];
    }
    const cplx& operator()(std::size_t i, std::size_t j) const {
        assert(i < n_ && j < n_);
        return data_[i * n_ + j];
    }

    /// Largest |H_ij|.
    double max_abs() const {
        double m = 0.0;
        for (const auto& z : data_) m = std::max(m, std::abs(z));
        return m;
    }

    /// max |H_ij - conj(H_ji)|
    double hermiticity_defect() const {
        double d = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i; j < n_; ++j)
                d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
        return d;
    }

    std::vector<cplx> apply(const std::vector<cplx>& v) const {
        assert(v.size() == n_);
        std::vector<cplx> out(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            cplx acc{};
            for (std::size_t j = 0; j < n_; ++j) acc += (*this)(i, j) * v[j];
            out[i] = acc;
        }
        return out;
    }

    friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<cplx> data_;
};

inline SquareMatrix conjugate_transpose(const SquareMatrix& a) {
    SquareMatrix out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) out(i, j) = std::conj(a(j, i));
    return out;
}

} // namespace omtopo
