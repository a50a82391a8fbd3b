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

// Complex Gaussian mixture priors fitted with EM, and the conditional-mean
// estimator they induce under AWGN:
//
//   h_hat = sum_c p(c | y) [mu_c + C_c (C_c + eta^2 I)^{-1} (y - mu_c)]
//   p(c | y) ~ w_c N_C(y; mu_c, C_c + eta^2 I)
//
// The Kronecker variant fits one mixture to the receive-side columns of H
// and one to the transmit-side rows, then pairs every component:
// C_(i,j) = T_j (x) R_i, mu_(i,j) = mu_tx,j (x) mu_rx,i, w_(i,j) = w_rx,i w_tx,j.

#pragma once

#include "binary_io.hpp"
#include "channel.hpp"
#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace sbmce {

enum class GmmStructure : std::uint8_t { Full = 0, Kronecker = 1 };

inline const char *to_string(GmmStructure s) { return s == GmmStructure::Full ? "full" : "kronecker"; }

struct GmmPrior
{
    std::vector<double> weights;
    std::vector<CVector> means;
    std::vector<CMatrix> covs;
    GmmStructure structure = GmmStructure::Full;

    std::size_t components() const noexcept { return weights.size(); }
    Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
};

struct GmmFitOptions
{
    int max_iterations = 300;
    double tolerance = 1e-6;      // relative log-likelihood improvement
    double covariance_floor = 1e-6;
    int kmeans_iterations = 10;
};

struct GmmFitInfo
{
    int iterations = 0;
    std::vector<double> log_likelihood; // mean per-sample, per iteration
};

namespace detail {

// log N_C(x; mu, C) up to the -d log(pi) constant, for every column of x.
inline RVector log_density_columns(const CMatrix &x, const CVector &mu, const HermitianFactor &f)
{
    const CMatrix centered = x.colwise() - mu;
    const CMatrix z = f.whiten(centered);
    return (-z.colwise().squaredNorm().array() - f.log_det()).matrix().transpose();
}

inline void log_normalize_rows(RMatrix &logp, RVector &log_norm)
{
    log_norm.resize(logp.rows());
    for (Eigen::Index m = 0; m < logp.rows(); ++m)
    {
        const double mx = logp.row(m).maxCoeff();
        if (!std::isfinite(mx))
        {
            logp.row(m).setConstant(-std::log(static_cast<double>(logp.cols())));
            log_norm[m] = mx;
            continue;
        }
        const double s = (logp.row(m).array() - mx).exp().sum();
        log_norm[m] = mx + std::log(s);
        logp.row(m).array() -= log_norm[m];
    }
}

// k-means++ seeding followed by a few Lloyd iterations; returns labels.
inline std::vector<int> kmeans_labels(const CMatrix &x, int k, int iterations, Rng &rng)
{
    const Eigen::Index m = x.cols();
    std::vector<CVector> centers;
    centers.push_back(x.col(rng.uniform_int(0, static_cast<int>(m - 1))));
    RVector d2 = (x.colwise() - centers[0]).colwise().squaredNorm().transpose();
    while (static_cast<int>(centers.size()) < k)
    {
        const double total = d2.sum();
        Eigen::Index pick = rng.uniform_int(0, static_cast<int>(m - 1));
        if (total > 0.0)
        {
            double r = rng.uniform() * total;
            for (Eigen::Index i = 0; i < m; ++i)
            {
                r -= d2[i];
                if (r <= 0.0)
                {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(x.col(pick));
        d2 = d2.cwiseMin((x.colwise() - centers.back()).colwise().squaredNorm().transpose());
    }
    std::vector<int> labels(static_cast<std::size_t>(m), 0);
    for (int it = 0; it <= iterations; ++it)
    {
        RMatrix dist(m, k);
        for (int c = 0; c < k; ++c)
            dist.col(c) = (x.colwise() - centers[static_cast<std::size_t>(c)]).colwise().squaredNorm().transpose();
        for (Eigen::Index i = 0; i < m; ++i)
        {
            Eigen::Index best;
            dist.row(i).minCoeff(&best);
            labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        }
        if (it == iterations)
            break;
        std::vector<CVector> sums(static_cast<std::size_t>(k), CVector::Zero(x.rows()));
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < m; ++i)
        {
            sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] += x.col(i);
            ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c)
            if (counts[static_cast<std::size_t>(c)] > 0)
                centers[static_cast<std::size_t>(c)] = sums[static_cast<std::size_t>(c)] / counts[static_cast<std::size_t>(c)];
    }
    return labels;
}

} // namespace detail

// EM for a full-covariance complex GMM on the columns of x.
inline GmmPrior fit_gmm_columns(const CMatrix &x, int n_components, Rng &rng, const GmmFitOptions &opt = {},
                                GmmFitInfo *info = nullptr)
{
    require(n_components >= 1, ErrorKind::Parameter, "gmm_fit: n_components must be >= 1");
    require(x.cols() >= n_components, ErrorKind::Parameter, "gmm_fit: fewer samples than components");
    const Eigen::Index d = x.rows();
    const Eigen::Index m = x.cols();
    const auto kc = static_cast<std::size_t>(n_components);
    const CMatrix eye = CMatrix::Identity(d, d);

    const CVector global_mean = x.rowwise().mean();
    const CMatrix global_cov = (x.colwise() - global_mean) * (x.colwise() - global_mean).adjoint() / static_cast<double>(m);

    RMatrix resp = RMatrix::Zero(m, n_components);
    if (n_components == 1)
        resp.setOnes();
    else
    {
        const auto labels = detail::kmeans_labels(x, n_components, opt.kmeans_iterations, rng);
        for (Eigen::Index i = 0; i < m; ++i)
            resp(i, labels[static_cast<std::size_t>(i)]) = 1.0;
    }

    GmmPrior g;
    g.weights.assign(kc, 1.0 / n_components);
    g.means.assign(kc, global_mean);
    g.covs.assign(kc, global_cov + opt.covariance_floor * eye);

    auto m_step = [&] {
        for (std::size_t c = 0; c < kc; ++c)
        {
            const RVector r = resp.col(static_cast<Eigen::Index>(c));
            const double nc = r.sum();
            g.weights[c] = nc / static_cast<double>(m);
            if (nc < 1e-10)
                continue; // collapsed: keep previous mean/covariance, weight ~ 0
            g.means[c] = (x * r.cast<Complex>()) / nc;
            const CMatrix centered = x.colwise() - g.means[c];
            const CMatrix weighted = centered * r.cwiseSqrt().cast<Complex>().asDiagonal();
            CMatrix cov = weighted * weighted.adjoint() / nc;
            cov = 0.5 * (cov + cov.adjoint().eval());
            g.covs[c] = cov + opt.covariance_floor * eye;
        }
    };

    m_step();
    double prev = -std::numeric_limits<double>::infinity();
    int it = 0;
    const double log_pi_d = static_cast<double>(d) * std::log(std::numbers::pi);
    for (; it < opt.max_iterations; ++it)
    {
        RMatrix logp(m, n_components);
        for (std::size_t c = 0; c < kc; ++c)
        {
            const HermitianFactor f(g.covs[c]);
            const double lw = g.weights[c] > 0.0 ? std::log(g.weights[c]) : -std::numeric_limits<double>::infinity();
            logp.col(static_cast<Eigen::Index>(c)) = detail::log_density_columns(x, g.means[c], f).array() + lw;
        }
        RVector log_norm;
        detail::log_normalize_rows(logp, log_norm);
        resp = logp.array().exp().matrix();
        const double ll = log_norm.mean() - log_pi_d;
        if (info)
            info->log_likelihood.push_back(ll);
        m_step();
        if (std::isfinite(prev) && std::abs(ll - prev) <= opt.tolerance * std::abs(prev))
        {
            ++it;
            break;
        }
        prev = ll;
    }
    if (info)
        info->iterations = it;
    g.structure = GmmStructure::Full;
    return g;
}

struct GmmSpec
{
    GmmStructure structure = GmmStructure::Full;
    int n_components = 64;    // full
    int n_rx_components = 8;  // kronecker, receive side
    int n_tx_components = 8;  // kronecker, transmit side
};

inline GmmPrior gmm_fit(const ChannelDataset &train_ds, const GmmSpec &spec, Rng &rng, const GmmFitOptions &opt = {})
{
    require(train_ds.domain == Domain::Spatial, ErrorKind::Parameter, "gmm_fit: expects a spatial-domain dataset");
    require(!train_ds.empty(), ErrorKind::Parameter, "gmm_fit: empty dataset");
    if (spec.structure == GmmStructure::Full)
        return fit_gmm_columns(train_ds.samples, spec.n_components, rng, opt);

    const Eigen::Index nr = train_ds.n_rx;
    const Eigen::Index nt = train_ds.n_tx;
    const Eigen::Index m = train_ds.size();
    CMatrix rx_samples(nr, m * nt);
    CMatrix tx_samples(nt, m * nr);
    for (Eigen::Index s = 0; s < m; ++s)
    {
        Eigen::Map<const CMatrix> h(train_ds.samples.col(s).data(), nr, nt);
        rx_samples.middleCols(s * nt, nt) = h;
        tx_samples.middleCols(s * nr, nr) = h.transpose();
    }
    Rng rx_rng = rng.split(1);
    Rng tx_rng = rng.split(2);
    const GmmPrior rx = fit_gmm_columns(rx_samples, spec.n_rx_components, rx_rng, opt);
    const GmmPrior tx = fit_gmm_columns(tx_samples, spec.n_tx_components, tx_rng, opt);

    GmmPrior g;
    g.structure = GmmStructure::Kronecker;
    for (std::size_t j = 0; j < tx.components(); ++j)
        for (std::size_t i = 0; i < rx.components(); ++i)
        {
            g.weights.push_back(rx.weights[i] * tx.weights[j]);
            g.means.push_back(kron(tx.means[j], rx.means[i]));
            g.covs.push_back(kron(tx.covs[j], rx.covs[i]));
        }
    return g;
}

// Per-noise-level factorizations of C_c + eta^2 I, reused across observations.
class GmmFilter
{
  public:
    GmmFilter(const GmmPrior &prior, double eta_sq) : prior_(&prior)
    {
        require(eta_sq >= 0.0, ErrorKind::Parameter, "GMM estimator: eta^2 must be >= 0");
        require(prior.components() >= 1, ErrorKind::Parameter, "GMM estimator: empty prior");
        const Eigen::Index d = prior.dim();
        for (std::size_t c = 0; c < prior.components(); ++c)
        {
            CMatrix a = prior.covs[c];
            a.diagonal().array() += eta_sq;
            factors_.emplace_back(a);
        }
        (void)d;
    }

    struct Result
    {
        CMatrix estimates;
        RMatrix responsibilities; // B x components
        bool fallback = false;    // some observation had no finite responsibility
    };

    Result estimate_columns(const CMatrix &y) const
    {
        const auto &p = *prior_;
        require(y.rows() == p.dim(), ErrorKind::Dimension, "GMM estimator: observation length mismatch");
        const auto kc = static_cast<Eigen::Index>(p.components());
        RMatrix logp(y.cols(), kc);
        for (Eigen::Index c = 0; c < kc; ++c)
        {
            const double w = p.weights[static_cast<std::size_t>(c)];
            const double lw = w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
            logp.col(c) = detail::log_density_columns(y, p.means[static_cast<std::size_t>(c)],
                                                      factors_[static_cast<std::size_t>(c)])
                              .array() +
                          lw;
        }
        Result out;
        for (Eigen::Index b = 0; b < logp.rows(); ++b)
            if (!std::isfinite(logp.row(b).maxCoeff()))
                out.fallback = true;
        RVector log_norm;
        detail::log_normalize_rows(logp, log_norm);
        out.responsibilities = logp.array().exp().matrix();
        out.estimates = CMatrix::Zero(y.rows(), y.cols());
        for (Eigen::Index c = 0; c < kc; ++c)
        {
            const auto &mu = p.means[static_cast<std::size_t>(c)];
            const CMatrix centered = y.colwise() - mu;
            CMatrix cond = p.covs[static_cast<std::size_t>(c)] * factors_[static_cast<std::size_t>(c)].solve(centered);
            cond.colwise() += mu;
            out.estimates += cond * out.responsibilities.col(c).cast<Complex>().asDiagonal();
        }
        return out;
    }

  private:
    const GmmPrior *prior_;
    std::vector<HermitianFactor> factors_;
};

// ---------- persistence ----------

inline constexpr std::string_view gmm_magic = "SBMGM1";
inline constexpr std::uint16_t gmm_version = 1;

inline void save_gmm(const GmmPrior &g, const std::string &path)
{
    io::Writer w(path);
    w.magic(gmm_magic);
    w.value(gmm_version);
    w.value(static_cast<std::uint8_t>(g.structure));
    w.value(static_cast<std::uint32_t>(g.dim()));
    w.value(static_cast<std::uint32_t>(g.components()));
    for (std::size_t c = 0; c < g.components(); ++c)
    {
        w.value(g.weights[c]);
        w.doubles(reinterpret_cast<const double *>(g.means[c].data()), static_cast<std::size_t>(g.means[c].size()) * 2);
        w.doubles(reinterpret_cast<const double *>(g.covs[c].data()), static_cast<std::size_t>(g.covs[c].size()) * 2);
    }
    w.close();
}

inline GmmPrior load_gmm(const std::string &path)
{
    io::Reader r(path);
    r.expect_magic(gmm_magic);
    r.expect_version(gmm_version);
    GmmPrior g;
    const auto tag = r.value<std::uint8_t>();
    require(tag <= 1, ErrorKind::Format, "'" + path + "' has unknown GMM structure tag");
    g.structure = static_cast<GmmStructure>(tag);
    const auto d = static_cast<Eigen::Index>(r.value<std::uint32_t>());
    const auto kc = r.value<std::uint32_t>();
    require(d >= 1 && d < 4096 && kc >= 1 && kc < 65536, ErrorKind::Format, "'" + path + "' has implausible dimensions");
    for (std::uint32_t c = 0; c < kc; ++c)
    {
        g.weights.push_back(r.value<double>());
        CVector mu(d);
        r.doubles(reinterpret_cast<double *>(mu.data()), static_cast<std::size_t>(d) * 2);
        CMatrix cov(d, d);
        r.doubles(reinterpret_cast<double *>(cov.data()), static_cast<std::size_t>(d * d) * 2);
        g.means.push_back(std::move(mu));
        g.covs.push_back(std::move(cov));
    }
    r.expect_end();
    return g;
}

} // namespace sbmce
