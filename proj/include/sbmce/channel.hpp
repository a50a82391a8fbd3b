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

// Synthetic geometric Rician channel model and dataset containers.
//
// A mobile terminal (MT) is dropped uniformly in azimuth inside the base
// station (BS) sector. Both sides use half-wavelength ULAs. The MT array is
// parallel to the BS array (fixed broadside orientation), so the LOS path
// departs the MT at the same azimuth at which it arrives at the BS. NLOS
// paths are clustered around the LOS direction with a Gaussian angle
// spread, drawn independently on each side.
//
//   H = sum_p g_p a_rx(theta_p) a_tx(phi_p)^H,   a(theta)_j = exp(i pi j sin theta)

#pragma once

#include "binary_io.hpp"
#include "numerics.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sbmce {

struct ScenarioConfig
{
    Eigen::Index n_rx = 16;
    Eigen::Index n_tx = 4;
    double sector_halfangle_deg = 60.0;
    int n_paths = 4;
    std::pair<double, double> rician_k_db_range{0.0, 10.0};
    double angle_spread_deg = 10.0;
    std::uint64_t seed = 0;

    void validate() const
    {
        require(n_rx >= 1 && n_tx >= 1, ErrorKind::Config, "scenario: n_rx and n_tx must be >= 1");
        require(n_paths >= 1, ErrorKind::Config, "scenario: n_paths must be >= 1");
        require(sector_halfangle_deg > 0.0 && sector_halfangle_deg <= 90.0, ErrorKind::Config,
                "scenario: sector_halfangle must lie in (0, 90] degrees");
        require(rician_k_db_range.first <= rician_k_db_range.second, ErrorKind::Config,
                "scenario: rician_k_db_range must be ordered (lo <= hi)");
        require(angle_spread_deg >= 0.0, ErrorKind::Config, "scenario: angle_spread must be >= 0");
    }
};

enum class Domain : std::uint8_t { Spatial = 0, Beamspace = 1 };
enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

inline const char *to_string(Domain d) { return d == Domain::Spatial ? "spatial" : "beamspace"; }
inline const char *to_string(Split s)
{
    return s == Split::Train ? "train" : (s == Split::Val ? "val" : "test");
}

// Samples are stored column-wise: samples.col(m) = vec(H_m).
struct ChannelDataset
{
    Eigen::Index n_rx = 0;
    Eigen::Index n_tx = 0;
    CMatrix samples;
    Domain domain = Domain::Spatial;
    Split split = Split::Train;
    ScenarioConfig scenario;

    Eigen::Index dim() const noexcept { return n_rx * n_tx; }
    Eigen::Index size() const noexcept { return samples.cols(); }
    bool empty() const noexcept { return samples.cols() == 0; }
    CVector sample(Eigen::Index m) const { return samples.col(m); }

    double mean_squared_norm() const
    {
        require(!empty(), ErrorKind::Parameter, "mean squared norm of empty dataset");
        return samples.colwise().squaredNorm().mean();
    }
};

inline CVector steering_vector(Eigen::Index n, double angle_rad)
{
    CVector a(n);
    const double s = std::sin(angle_rad);
    for (Eigen::Index j = 0; j < n; ++j)
        a[j] = std::polar(1.0, std::numbers::pi * static_cast<double>(j) * s);
    return a;
}

inline CMatrix generate_channel(const ScenarioConfig &cfg, Rng &rng)
{
    cfg.validate();
    constexpr double deg = std::numbers::pi / 180.0;
    const double half = cfg.sector_halfangle_deg * deg;
    const double theta_los = rng.uniform(-half, half);
    const double phi_los = theta_los;

    const double k_db = rng.uniform(cfg.rician_k_db_range.first, cfg.rician_k_db_range.second);
    const double k_lin = std::pow(10.0, k_db / 10.0);

    std::vector<Complex> gains;
    std::vector<std::pair<double, double>> angles;
    gains.reserve(static_cast<std::size_t>(cfg.n_paths));
    const double los_power = cfg.n_paths == 1 ? 1.0 : k_lin / (k_lin + 1.0);
    gains.push_back(std::polar(std::sqrt(los_power), rng.uniform(0.0, 2.0 * std::numbers::pi)));
    angles.emplace_back(theta_los, phi_los);

    const double clamp = 90.0 * deg;
    for (int p = 1; p < cfg.n_paths; ++p)
    {
        const double nlos_var = 1.0 / ((k_lin + 1.0) * (cfg.n_paths - 1));
        const double s = std::sqrt(nlos_var / 2.0);
        const double re = rng.normal();
        const double im = rng.normal();
        gains.emplace_back(s * re, s * im);
        const double aoa = std::clamp(theta_los + cfg.angle_spread_deg * deg * rng.normal(), -clamp, clamp);
        const double aod = std::clamp(phi_los + cfg.angle_spread_deg * deg * rng.normal(), -clamp, clamp);
        angles.emplace_back(aoa, aod);
    }

    double total = 0.0;
    for (const auto &g : gains)
        total += std::norm(g);
    const double renorm = 1.0 / std::sqrt(total);

    CMatrix h = CMatrix::Zero(cfg.n_rx, cfg.n_tx);
    for (std::size_t p = 0; p < gains.size(); ++p)
    {
        const CVector a_rx = steering_vector(cfg.n_rx, angles[p].first);
        const CVector a_tx = steering_vector(cfg.n_tx, angles[p].second);
        h.noalias() += (gains[p] * renorm) * a_rx * a_tx.adjoint();
    }
    return h;
}

inline ChannelDataset generate_dataset(const ScenarioConfig &cfg, Eigen::Index m, std::uint64_t stream_seed,
                                       Split split)
{
    cfg.validate();
    ChannelDataset ds;
    ds.n_rx = cfg.n_rx;
    ds.n_tx = cfg.n_tx;
    ds.scenario = cfg;
    ds.split = split;
    ds.samples.resize(cfg.n_rx * cfg.n_tx, m);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        Rng rng(derive_seed(stream_seed, static_cast<std::uint64_t>(i)));
        const CMatrix h = generate_channel(cfg, rng);
        ds.samples.col(i) = Eigen::Map<const CVector>(h.data(), h.size());
    }
    return ds;
}

// Global scale s such that mean ||s h_m||^2 = n_rx n_tx on this dataset.
inline double fit_normalization(const ChannelDataset &ds)
{
    require(!ds.empty(), ErrorKind::Parameter, "normalize: empty dataset");
    const double energy = ds.mean_squared_norm();
    require(energy > 0.0 && std::isfinite(energy), ErrorKind::Parameter, "normalize: zero-energy dataset");
    return std::sqrt(static_cast<double>(ds.dim()) / energy);
}

inline ChannelDataset apply_scale(ChannelDataset ds, double scale)
{
    ds.samples *= scale;
    return ds;
}

struct Normalized
{
    ChannelDataset dataset;
    double scale = 1.0;
};

inline Normalized normalize(const ChannelDataset &ds)
{
    const double s = fit_normalization(ds);
    return {apply_scale(ds, s), s};
}

struct DatasetSplits
{
    ChannelDataset train;
    ChannelDataset val;
    ChannelDataset test;
    double scale = 1.0; // fitted on train, reused for val/test
};

// Full-scale split sizes for reference; desk-scale runs use fewer samples.
inline constexpr Eigen::Index full_scale_m_train = 100000;
inline constexpr Eigen::Index full_scale_m_val = 10000;
inline constexpr Eigen::Index full_scale_m_test = 10000;

inline DatasetSplits make_splits(const ScenarioConfig &cfg, Eigen::Index m_train, Eigen::Index m_val,
                                 Eigen::Index m_test, const Rng &rng)
{
    require(m_train >= 1 && m_val >= 1 && m_test >= 1, ErrorKind::Parameter, "make_splits: counts must be >= 1");
    DatasetSplits s;
    s.train = generate_dataset(cfg, m_train, rng.split(1).seed(), Split::Train);
    s.val = generate_dataset(cfg, m_val, rng.split(2).seed(), Split::Val);
    s.test = generate_dataset(cfg, m_test, rng.split(3).seed(), Split::Test);
    s.scale = fit_normalization(s.train);
    s.train = apply_scale(std::move(s.train), s.scale);
    s.val = apply_scale(std::move(s.val), s.scale);
    s.test = apply_scale(std::move(s.test), s.scale);
    return s;
}

inline ChannelDataset to_beamspace(const ChannelDataset &ds)
{
    require(ds.domain == Domain::Spatial, ErrorKind::Parameter, "to_beamspace: dataset already in beamspace");
    ChannelDataset out = ds;
    out.samples = Beamspace(ds.n_rx, ds.n_tx).forward_columns(ds.samples);
    out.domain = Domain::Beamspace;
    return out;
}

// ---------- persistence ----------

inline constexpr std::string_view dataset_magic = "SBMCH1";
inline constexpr std::uint16_t dataset_version = 1;

inline void save_dataset(const ChannelDataset &ds, const std::string &path)
{
    io::Writer w(path);
    w.magic(dataset_magic);
    w.value(dataset_version);
    w.value(static_cast<std::uint32_t>(ds.n_rx));
    w.value(static_cast<std::uint32_t>(ds.n_tx));
    w.value(static_cast<std::uint64_t>(ds.size()));
    w.value(static_cast<std::uint8_t>(ds.domain));
    // std::complex<double> is layout-compatible with double[2]
    w.doubles(reinterpret_cast<const double *>(ds.samples.data()), static_cast<std::size_t>(ds.samples.size()) * 2);
    w.close();
}

inline ChannelDataset load_dataset(const std::string &path)
{
    io::Reader r(path);
    r.expect_magic(dataset_magic);
    r.expect_version(dataset_version);
    ChannelDataset ds;
    ds.n_rx = r.value<std::uint32_t>();
    ds.n_tx = r.value<std::uint32_t>();
    const auto m = r.value<std::uint64_t>();
    const auto tag = r.value<std::uint8_t>();
    require(ds.n_rx >= 1 && ds.n_tx >= 1, ErrorKind::Format, "'" + path + "' has zero antenna dimensions");
    require(tag <= 1, ErrorKind::Format, "'" + path + "' has unknown domain tag " + std::to_string(tag));
    require(m < (std::uint64_t{1} << 40) / static_cast<std::uint64_t>(ds.n_rx * ds.n_tx), ErrorKind::Format,
            "'" + path + "' has an implausible sample count");
    ds.domain = static_cast<Domain>(tag);
    ds.scenario.n_rx = ds.n_rx;
    ds.scenario.n_tx = ds.n_tx;
    ds.samples.resize(ds.n_rx * ds.n_tx, static_cast<Eigen::Index>(m));
    r.doubles(reinterpret_cast<double *>(ds.samples.data()), static_cast<std::size_t>(ds.samples.size()) * 2);
    r.expect_end();
    return ds;
}

} // namespace sbmce
