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

// Pilot observations y = (P^T (x) I) h + n and the channel estimators that
// work on the decorrelated observation A^H y:
//
//   LS          A^H y
//   SCov-LMMSE  C (C + eta^2 I)^{-1} A^H y
//   GMM         conditional mean under a fitted Gaussian mixture (gmm.hpp)
//   SBM         beamspace denoising with a learned score, skipping delta
//               schedule points per update:
//                 h <- h + (sigma_k^2 - sigma_{k-delta}^2) s(h, k)
//               starting at k_hat = argmin_k |eta^2 - sigma_k^2|; the last
//               update always targets sigma = 0.

#pragma once

#include "gmm.hpp"
#include "numerics.hpp"
#include "schedule.hpp"
#include "scorenet.hpp"

#include <concepts>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace sbmce {

// Unitary pilot matrix P (n_tx x n_p) with n_p = n_tx.
class Pilot
{
  public:
    Pilot() = default;

    explicit Pilot(CMatrix p) : p_(std::move(p))
    {
        require(p_.rows() == p_.cols(), ErrorKind::Parameter, "pilot: only n_p = n_tx is supported");
        const double err = (p_ * p_.adjoint() - CMatrix::Identity(p_.rows(), p_.rows())).norm();
        require(err <= 1e-10, ErrorKind::Parameter, "pilot matrix is not unitary (||P P^H - I|| = " + std::to_string(err) + ")");
    }

    static Pilot identity(Eigen::Index n_tx) { return Pilot(CMatrix::Identity(n_tx, n_tx)); }
    static Pilot dft(Eigen::Index n_tx) { return Pilot(unitary_dft(n_tx)); }

    static Pilot random_unitary(Eigen::Index n_tx, Rng &rng)
    {
        CMatrix g(n_tx, n_tx);
        for (Eigen::Index i = 0; i < g.size(); ++i)
            g.data()[i] = Complex(rng.normal(), rng.normal());
        Eigen::HouseholderQR<CMatrix> qr(g);
        CMatrix q = qr.householderQ() * CMatrix::Identity(n_tx, n_tx);
        return Pilot(q);
    }

    const CMatrix &matrix() const noexcept { return p_; }
    Eigen::Index n_tx() const noexcept { return p_.rows(); }

  private:
    CMatrix p_;
};

struct PilotObservation
{
    Eigen::Index n_rx = 0;
    Eigen::Index n_tx = 0;
    CVector y; // vec(Y), length n_rx * n_p
    Pilot pilot;
    double eta_sq = 0.0;
};

inline PilotObservation observe(const CVector &h, Eigen::Index n_rx, const Pilot &pilot, double eta_sq, Rng &rng)
{
    const Eigen::Index n_tx = pilot.n_tx();
    require(h.size() == n_rx * n_tx, ErrorKind::Dimension, "observe: channel length != n_rx * n_tx");
    require(eta_sq >= 0.0, ErrorKind::Parameter, "observe: eta^2 must be >= 0");
    Eigen::Map<const CMatrix> hm(h.data(), n_rx, n_tx);
    CMatrix y = hm * pilot.matrix();
    const CVector n = draw_circular_gaussian(y.size(), eta_sq, rng);
    y += Eigen::Map<const CMatrix>(n.data(), n_rx, n_tx);
    return {n_rx, n_tx, Eigen::Map<CVector>(y.data(), y.size()), pilot, eta_sq};
}

// A^H y = vec(Y P^H).
inline CVector decorrelate(const PilotObservation &obs)
{
    require(obs.y.size() == obs.n_rx * obs.n_tx && obs.pilot.n_tx() == obs.n_tx, ErrorKind::Dimension,
            "observation dims inconsistent with pilot");
    Eigen::Map<const CMatrix> y(obs.y.data(), obs.n_rx, obs.n_tx);
    CMatrix out = y * obs.pilot.matrix().adjoint();
    return Eigen::Map<CVector>(out.data(), out.size());
}

// One estimator call: the estimate plus its step accounting.
struct EstimateResult
{
    CVector h;
    int k_hat = 0;  // initial step (SBM only)
    int steps = 0;  // executed denoising steps ceil(k_hat / delta)
    int nfe = 0;    // score network evaluations
    bool regularized = false;
    bool clamped = false; // eta^2 outside the schedule range
    std::string warning;
};

inline EstimateResult ls_estimate(const PilotObservation &obs)
{
    EstimateResult r;
    r.h = decorrelate(obs);
    return r;
}

inline CMatrix sample_covariance(const ChannelDataset &ds)
{
    require(!ds.empty(), ErrorKind::Parameter, "sample covariance of empty dataset");
    return ds.samples * ds.samples.adjoint() / static_cast<double>(ds.size());
}

inline EstimateResult scov_lmmse(const PilotObservation &obs, const CMatrix &cov)
{
    const CVector y = decorrelate(obs);
    require(cov.rows() == y.size() && cov.cols() == y.size(), ErrorKind::Dimension,
            "scov_lmmse: covariance must be (n_rx n_tx) x (n_rx n_tx)");
    CMatrix a = cov;
    a.diagonal().array() += obs.eta_sq;
    const SolveResult s = hermitian_solve(a, y);
    EstimateResult r;
    r.h = cov * s.x.col(0);
    r.regularized = s.regularized;
    return r;
}

// W = C (C + eta^2 I)^{-1}, formed from a Hermitian solve for many observations.
class LmmseFilter
{
  public:
    LmmseFilter(const CMatrix &cov, double eta_sq)
    {
        CMatrix a = cov;
        a.diagonal().array() += eta_sq;
        const SolveResult s = hermitian_solve(a, cov);
        w_ = s.x.adjoint();
        regularized_ = s.regularized;
    }

    CMatrix apply(const CMatrix &y) const { return w_ * y; }
    bool regularized() const noexcept { return regularized_; }

  private:
    CMatrix w_;
    bool regularized_ = false;
};

inline EstimateResult gmm_estimate(const PilotObservation &obs, const GmmPrior &prior)
{
    const GmmFilter filter(prior, obs.eta_sq);
    auto res = filter.estimate_columns(decorrelate(obs));
    EstimateResult r;
    r.h = res.estimates.col(0);
    if (res.fallback)
        r.warning = "degenerate GMM responsibilities; using uniform weights";
    return r;
}

// ---------- score-based estimation ----------

// Maps a batch of beamspace vectors (N x B) at step k to their scores.
template <typename F>
concept ScoreFunction = requires(F f, const CMatrix &h, int k, double sigma) {
    { f(h, k, sigma) } -> std::convertible_to<CMatrix>;
};

// Learned score; counts network evaluations (one per call, i.e. per step).
class NetworkScore
{
  public:
    explicit NetworkScore(const ScoreModel &model) : model_(&model) {}

    CMatrix operator()(const CMatrix &h, int k, double sigma)
    {
        ++evaluations_;
        return score(*model_, h, k, sigma);
    }

    long evaluations() const noexcept { return evaluations_; }

  private:
    const ScoreModel *model_;
    long evaluations_ = 0;
};

// Exact score of a zero-mean Gaussian beamspace prior N_C(0, C_b) perturbed
// by the VE kernel: -(C_b + sigma_k^2 I)^{-1} h.
class GaussianPriorScore
{
  public:
    explicit GaussianPriorScore(CMatrix beamspace_cov) : cov_(std::move(beamspace_cov)) {}

    CMatrix operator()(const CMatrix &h, int k, double sigma)
    {
        auto it = factors_.find(k);
        if (it == factors_.end())
        {
            CMatrix a = cov_;
            a.diagonal().array() += sigma * sigma;
            it = factors_.emplace(k, HermitianFactor(a)).first;
        }
        return -it->second.solve(h);
    }

  private:
    CMatrix cov_;
    std::map<int, HermitianFactor> factors_;
};

// Called after each denoising update with the step index and the current
// beamspace estimates.
using StepObserver = std::function<void(int k, const CMatrix &beamspace_estimates)>;

struct BatchEstimate
{
    CMatrix h; // spatial estimates, column per observation
    int k_hat = 0;
    int steps = 0;
    int nfe = 0;
    bool clamped = false;
};

// Denoises decorrelated observations (N x B) that share the noise level eta^2.
template <ScoreFunction F>
BatchEstimate sbm_estimate_columns(const CMatrix &decorrelated, double eta_sq, F &score_fn, const NoiseSchedule &sched,
                                   int delta, const Beamspace &bs, const StepObserver &observer = {})
{
    require(delta >= 1 && delta <= sched.steps(), ErrorKind::Parameter,
            "sbm_estimate: delta must lie in [1, K] (got " + std::to_string(delta) + ")");
    require(decorrelated.rows() == bs.size(), ErrorKind::Dimension, "sbm_estimate: observation length mismatch");
    BatchEstimate out;
    out.clamped = !sched.covers(eta_sq);
    out.k_hat = initial_step(eta_sq, sched);
    CMatrix h = bs.forward_columns(decorrelated);
    for (int k : skip_indices(out.k_hat, delta))
    {
        const double s_k = sched.sigma(k);
        const double s_next = target_sigma(sched, k, delta);
        const CMatrix s = score_fn(h, k, s_k);
        require(s.rows() == h.rows() && s.cols() == h.cols(), ErrorKind::Dimension,
                "sbm_estimate: score function returned a wrong shape");
        h += (s_k * s_k - s_next * s_next) * s;
        ++out.steps;
        ++out.nfe;
        if (observer)
            observer(k, h);
    }
    out.h = bs.inverse_columns(h);
    return out;
}

template <ScoreFunction F>
EstimateResult sbm_estimate(const PilotObservation &obs, F &score_fn, const NoiseSchedule &sched, int delta)
{
    const Beamspace bs(obs.n_rx, obs.n_tx);
    const BatchEstimate b = sbm_estimate_columns(CMatrix(decorrelate(obs)), obs.eta_sq, score_fn, sched, delta, bs);
    EstimateResult r;
    r.h = b.h.col(0);
    r.k_hat = b.k_hat;
    r.steps = b.steps;
    r.nfe = b.nfe;
    r.clamped = b.clamped;
    if (b.clamped)
        r.warning = "eta^2 outside the schedule range; initial step clamped";
    return r;
}

inline void require_compatible(const ScoreModel &model, const NoiseSchedule &sched, const PilotObservation &obs)
{
    require(model.steps() == sched.steps(), ErrorKind::Parameter, "sbm_estimate: schedule does not match the model");
    require(model.arch().n_rx == obs.n_rx && model.arch().n_tx == obs.n_tx, ErrorKind::Dimension,
            "sbm_estimate: observation dims do not match the model");
}

inline EstimateResult sbm_estimate(const PilotObservation &obs, const ScoreModel &model, const NoiseSchedule &sched,
                                   int delta)
{
    require_compatible(model, sched, obs);
    NetworkScore s(model);
    return sbm_estimate(obs, s, sched, delta);
}

// delta = K: one network evaluation, h_0 = h_k_hat + sigma_k_hat^2 s(h_k_hat, k_hat).
inline EstimateResult single_step_estimate(const PilotObservation &obs, const ScoreModel &model,
                                           const NoiseSchedule &sched)
{
    return sbm_estimate(obs, model, sched, sched.steps());
}

} // namespace sbmce
