// SPDX-License-Identifier: Apache-2.0
//
// sbmce: score-based MIMO channel estimation
// Copyright (C) 2026 sbmce contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Complex linear algebra helpers shared by every module: unitary DFT
// matrices, the Kronecker-DFT beamspace transform, circular Gaussian
// draws and jittered Hermitian solves.

#pragma once

#include "error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace sbmce {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

// ---------- random numbers ----------

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Order-sensitive seed combination, used to derive independent substreams
// such as hash(seed, snr_index, sample_index).
template <typename... Ts>
std::uint64_t derive_seed(std::uint64_t seed, Ts... parts)
{
    std::uint64_t h = splitmix64(seed);
    ((h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(parts) + 0x632BE59BD9B4E019ULL))), ...);
    return h;
}

// Deterministic generator (mt19937_64). Not shareable between threads;
// derive a child with split() instead.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    static constexpr const char *algorithm() noexcept { return "mt19937_64"; }

    Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    std::mt19937_64 &engine() noexcept { return engine_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Circularly-symmetric complex Gaussian vector, E|x_i|^2 = variance.
inline CVector draw_circular_gaussian(Eigen::Index len, double variance, Rng &rng)
{
    require(variance >= 0.0 && std::isfinite(variance), ErrorKind::Parameter,
            "circular Gaussian variance must be finite and >= 0");
    CVector out(len);
    if (variance == 0.0)
    {
        out.setZero();
        return out;
    }
    const double s = std::sqrt(variance / 2.0);
    for (Eigen::Index i = 0; i < len; ++i)
    {
        const double re = rng.normal();
        const double im = rng.normal();
        out[i] = Complex(s * re, s * im);
    }
    return out;
}

// ---------- DFT / beamspace ----------

inline CMatrix unitary_dft(Eigen::Index n)
{
    require(n >= 1, ErrorKind::Dimension, "DFT size must be >= 1");
    CMatrix f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
        {
            // phase index taken modulo n
            const auto idx = static_cast<double>((r * c) % n);
            const double phase = -2.0 * std::numbers::pi * idx / static_cast<double>(n);
            f(r, c) = std::polar(scale, phase);
        }
    return f;
}

// (F_tx (x) F_rx) applied to vec(H) as F_rx * H * F_tx^T, never forming the
// Kronecker product. Caches both DFT matrices.
class Beamspace
{
  public:
    Beamspace(Eigen::Index n_rx, Eigen::Index n_tx)
        : n_rx_(n_rx), n_tx_(n_tx), f_rx_(unitary_dft(n_rx)), f_tx_(unitary_dft(n_tx))
    {
    }

    Eigen::Index n_rx() const noexcept { return n_rx_; }
    Eigen::Index n_tx() const noexcept { return n_tx_; }
    Eigen::Index size() const noexcept { return n_rx_ * n_tx_; }

    CVector forward(const CVector &h) const
    {
        check(h.size());
        Eigen::Map<const CMatrix> hm(h.data(), n_rx_, n_tx_);
        CMatrix out = f_rx_ * hm * f_tx_.transpose();
        return Eigen::Map<CVector>(out.data(), size());
    }

    CVector inverse(const CVector &b) const
    {
        check(b.size());
        Eigen::Map<const CMatrix> bm(b.data(), n_rx_, n_tx_);
        CMatrix out = f_rx_.adjoint() * bm * f_tx_.conjugate();
        return Eigen::Map<CVector>(out.data(), size());
    }

    // Column-wise versions for a batch stored as size() x B.
    CMatrix forward_columns(const CMatrix &batch) const { return apply_columns(batch, false); }
    CMatrix inverse_columns(const CMatrix &batch) const { return apply_columns(batch, true); }

  private:
    void check(Eigen::Index len) const
    {
        require(len == size(), ErrorKind::Dimension,
                "beamspace: vector length " + std::to_string(len) + " != n_rx*n_tx = " + std::to_string(size()));
    }

    CMatrix apply_columns(const CMatrix &batch, bool inverse) const
    {
        check(batch.rows());
        CMatrix out(batch.rows(), batch.cols());
        for (Eigen::Index j = 0; j < batch.cols(); ++j)
        {
            Eigen::Map<const CMatrix> hm(batch.col(j).data(), n_rx_, n_tx_);
            Eigen::Map<CMatrix> om(out.col(j).data(), n_rx_, n_tx_);
            if (inverse)
                om.noalias() = f_rx_.adjoint() * hm * f_tx_.conjugate();
            else
                om.noalias() = f_rx_ * hm * f_tx_.transpose();
        }
        return out;
    }

    Eigen::Index n_rx_;
    Eigen::Index n_tx_;
    CMatrix f_rx_;
    CMatrix f_tx_;
};

inline CVector beamspace(const CVector &h, Eigen::Index n_rx, Eigen::Index n_tx)
{
    return Beamspace(n_rx, n_tx).forward(h);
}

inline CVector inverse_beamspace(const CVector &h, Eigen::Index n_rx, Eigen::Index n_tx)
{
    return Beamspace(n_rx, n_tx).inverse(h);
}

// Dense Kronecker product, for oracles and Kronecker-structured covariances.
inline CMatrix kron(const CMatrix &a, const CMatrix &b)
{
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived> &m)
{
    return m.allFinite();
}

// ---------- Hermitian solves ----------

// Cholesky factor of a Hermitian matrix, with diagonal jitter escalation
// 1e-10 -> 1e-6 (x10) when the plain factorization fails or is
// numerically singular.
class HermitianFactor
{
  public:
    explicit HermitianFactor(const CMatrix &a)
    {
        require(a.rows() == a.cols(), ErrorKind::Dimension, "Hermitian factor of non-square matrix");
        if (try_factor(a, 0.0))
            return;
        for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0)
            if (try_factor(a, jitter))
                return;
        fail(ErrorKind::Numeric, "Cholesky factorization failed after jitter escalation to 1e-6");
    }

    double jitter() const noexcept { return jitter_; }
    bool regularized() const noexcept { return jitter_ > 0.0; }

    // log det(A + jitter I)
    double log_det() const
    {
        const auto &l = llt_.matrixLLT();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < l.rows(); ++i)
            acc += std::log(std::real(l(i, i)));
        return 2.0 * acc;
    }

    template <typename Rhs>
    CMatrix solve(const Eigen::MatrixBase<Rhs> &b) const
    {
        return llt_.solve(b);
    }

    // L^{-1} b, so that ||L^{-1} b||^2 = b^H A^{-1} b.
    template <typename Rhs>
    CMatrix whiten(const Eigen::MatrixBase<Rhs> &b) const
    {
        return llt_.matrixL().solve(b);
    }

  private:
    bool try_factor(const CMatrix &a, double jitter)
    {
        CMatrix m = a;
        if (jitter > 0.0)
            m.diagonal().array() += jitter;
        llt_.compute(m);
        if (llt_.info() != Eigen::Success)
            return false;
        const auto &l = llt_.matrixLLT();
        double max_diag = 0.0;
        double min_pivot = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < m.rows(); ++i)
        {
            max_diag = std::max(max_diag, std::abs(std::real(m(i, i))));
            min_pivot = std::min(min_pivot, std::norm(l(i, i)));
        }
        if (!(min_pivot > 1e-14 * max_diag) || !l.allFinite())
            return false;
        jitter_ = jitter;
        return true;
    }

    Eigen::LLT<CMatrix> llt_;
    double jitter_ = 0.0;
};

struct SolveResult
{
    CMatrix x;
    bool regularized = false;
};

// Solve A X = B for Hermitian PSD A. Falls back to a tolerance-based
// pseudo-solve when even the jittered Cholesky fails.
template <typename Rhs>
SolveResult hermitian_solve(const CMatrix &a, const Eigen::MatrixBase<Rhs> &b)
{
    try
    {
        HermitianFactor f(a);
        return {f.solve(b), f.regularized()};
    }
    catch (const Error &e)
    {
        if (e.kind() != ErrorKind::Numeric)
            throw;
    }
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(a);
    cod.setThreshold(1e-10);
    CMatrix x = cod.solve(b);
    require(x.allFinite(), ErrorKind::Numeric, "pseudo-solve produced non-finite values");
    return {x, true};
}

} // namespace sbmce
