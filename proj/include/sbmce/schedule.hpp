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

// Variance-exploding noise schedule:
//
//   sigma_k = sigma_min * (sigma_max / sigma_min)^(((k-1)/(K-1))^gamma),  k = 1..K
//
// with sigma_min/max = sqrt(1 / SNR_max/min). Step indices are 1-based and
// sigma_0 := 0 marks the fully denoised state.

#pragma once

#include "error.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace sbmce {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Noise std matching a linear SNR of 1/sigma^2.
inline double sigma_from_snr_db(double snr_db) { return std::sqrt(1.0 / db_to_linear(snr_db)); }

class NoiseSchedule
{
  public:
    NoiseSchedule() = default;

    NoiseSchedule(double snr_max_db, double snr_min_db, int num_steps, double gamma)
        : snr_max_db_(snr_max_db), snr_min_db_(snr_min_db), gamma_(gamma), steps_(num_steps)
    {
        require(num_steps >= 2, ErrorKind::Parameter, "schedule: K must be >= 2");
        require(gamma > 0.0 && std::isfinite(gamma), ErrorKind::Parameter, "schedule: gamma must be > 0");
        require(snr_max_db > snr_min_db, ErrorKind::Parameter, "schedule: snr_max_db must exceed snr_min_db");
        sigma_min_ = sigma_from_snr_db(snr_max_db);
        sigma_max_ = sigma_from_snr_db(snr_min_db);
        const double ratio = sigma_max_ / sigma_min_;
        sigmas_.resize(static_cast<std::size_t>(num_steps));
        for (int k = 1; k <= num_steps; ++k)
        {
            const double t = static_cast<double>(k - 1) / static_cast<double>(num_steps - 1);
            sigmas_[static_cast<std::size_t>(k - 1)] = sigma_min_ * std::pow(ratio, std::pow(t, gamma));
        }
        sigmas_.front() = sigma_min_;
        sigmas_.back() = sigma_max_;
    }

    // Rebuild from stored sigmas (checkpoint loading); a round trip is bit-exact.
    static NoiseSchedule restore(double snr_max_db, double snr_min_db, double gamma, std::vector<double> sigmas)
    {
        require(sigmas.size() >= 2, ErrorKind::Format, "schedule: stored K must be >= 2");
        for (std::size_t i = 1; i < sigmas.size(); ++i)
            require(sigmas[i - 1] < sigmas[i], ErrorKind::Format, "schedule: stored sigmas not strictly increasing");
        require(sigmas.front() > 0.0 && std::isfinite(sigmas.back()), ErrorKind::Format,
                "schedule: stored sigmas out of range");
        NoiseSchedule s;
        s.snr_max_db_ = snr_max_db;
        s.snr_min_db_ = snr_min_db;
        s.gamma_ = gamma;
        s.steps_ = static_cast<int>(sigmas.size());
        s.sigma_min_ = sigmas.front();
        s.sigma_max_ = sigmas.back();
        s.sigmas_ = std::move(sigmas);
        return s;
    }

    int steps() const noexcept { return steps_; }
    double gamma() const noexcept { return gamma_; }
    double sigma_min() const noexcept { return sigma_min_; }
    double sigma_max() const noexcept { return sigma_max_; }
    double snr_max_db() const noexcept { return snr_max_db_; }
    double snr_min_db() const noexcept { return snr_min_db_; }
    const std::vector<double> &sigmas() const noexcept { return sigmas_; }

    // sigma_k for k in [0, K]; sigma_0 = 0.
    double sigma(int k) const
    {
        require(k >= 0 && k <= steps_, ErrorKind::Parameter,
                "schedule: step index " + std::to_string(k) + " outside [0, " + std::to_string(steps_) + "]");
        return k == 0 ? 0.0 : sigmas_[static_cast<std::size_t>(k - 1)];
    }

    bool covers(double eta_sq) const
    {
        return eta_sq >= sigma_min_ * sigma_min_ && eta_sq <= sigma_max_ * sigma_max_;
    }

  private:
    double snr_max_db_ = 0.0;
    double snr_min_db_ = 0.0;
    double gamma_ = 1.0;
    int steps_ = 0;
    double sigma_min_ = 0.0;
    double sigma_max_ = 0.0;
    std::vector<double> sigmas_;
};

inline NoiseSchedule build_schedule(double snr_max_db, double snr_min_db, int num_steps, double gamma)
{
    return NoiseSchedule(snr_max_db, snr_min_db, num_steps, gamma);
}

// k_hat = argmin_k |eta^2 - sigma_k^2|. Ties go to the smaller k; values
// outside the schedule range clamp to 1 or K.
inline int initial_step(double eta_sq, const NoiseSchedule &sched)
{
    require(eta_sq >= 0.0 && std::isfinite(eta_sq), ErrorKind::Parameter, "initial_step: eta^2 must be >= 0");
    int best = 1;
    double best_gap = std::abs(eta_sq - sched.sigma(1) * sched.sigma(1));
    for (int k = 2; k <= sched.steps(); ++k)
    {
        const double s = sched.sigma(k);
        const double gap = std::abs(eta_sq - s * s);
        if (gap < best_gap)
        {
            best_gap = gap;
            best = k;
        }
    }
    return best;
}

// k_hat, k_hat - delta, ... (all >= 1); length ceil(k_hat / delta).
inline std::vector<int> skip_indices(int k_hat, int delta)
{
    require(delta >= 1, ErrorKind::Parameter, "skip_indices: delta must be >= 1");
    require(k_hat >= 1, ErrorKind::Parameter, "skip_indices: k_hat must be >= 1");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>((k_hat + delta - 1) / delta));
    for (int k = k_hat; k >= 1; k -= delta)
        out.push_back(k);
    return out;
}

// Target noise level of the update leaving step k; the last update of a
// skipping sequence always targets 0.
inline double target_sigma(const NoiseSchedule &sched, int k, int delta)
{
    return k - delta >= 1 ? sched.sigma(k - delta) : 0.0;
}

} // namespace sbmce
