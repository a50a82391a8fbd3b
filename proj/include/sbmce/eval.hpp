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

// NMSE sweeps over SNR for a set of estimators sharing one set of noisy
// observations per SNR, plus per-step NMSE traces and CSV output.

#pragma once

#include "csv.hpp"
#include "estimators.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace sbmce {

// NMSE = sum_m ||h_m - h_hat_m||^2 / (N M), samples stored column-wise.
inline double nmse(const CMatrix &truth, const CMatrix &est)
{
    require(truth.rows() == est.rows() && truth.cols() == est.cols(), ErrorKind::Dimension,
            "nmse: truth and estimate sets differ in size or dimension");
    require(truth.size() > 0, ErrorKind::Parameter, "nmse: empty set");
    return (truth - est).squaredNorm() / static_cast<double>(truth.size());
}

enum class EstimatorKind { Ls, ScovLmmse, Gmm, Sbm };

struct EstimatorSpec
{
    std::string id;
    EstimatorKind kind = EstimatorKind::Ls;
    int delta = 1;                // SBM; 0 selects delta = K
    std::optional<double> gamma;  // SBM; checked against the checkpoint
    std::string model_path;       // SBM; empty -> run-level model
    GmmSpec gmm;                  // GMM
};

inline std::vector<double> snr_range(double start, double stop, double step)
{
    require(step > 0.0 && stop >= start, ErrorKind::Config, "SNR range must satisfy step > 0 and stop >= start");
    std::vector<double> grid;
    const auto n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
    for (int i = 0; i <= n; ++i)
        grid.push_back(start + i * step);
    return grid;
}

struct SweepConfig
{
    std::vector<double> snr_grid_db = snr_range(-15.0, 20.0, 2.5);
    std::vector<EstimatorSpec> estimators;
    Eigen::Index m_test = 0; // 0: whole test set
    std::uint64_t seed = 0;
    bool measure_wall_time = false; // wall_time_s column is 0 when off
    int workers = 1;

    void validate() const
    {
        require(!snr_grid_db.empty(), ErrorKind::Config, "sweep: SNR grid is empty");
        require(m_test >= 0, ErrorKind::Config, "sweep: m_test must be >= 1 (or 0 for the whole test set)");
        require(workers >= 1, ErrorKind::Config, "sweep: workers must be >= 1");
        for (const auto &e : estimators)
        {
            require(!e.id.empty(), ErrorKind::Config, "sweep: estimator id must not be empty");
            require(e.id.find(',') == std::string::npos, ErrorKind::Config, "sweep: estimator id must not contain ','");
            require(e.delta >= 0, ErrorKind::Config, "sweep: delta must be >= 1 (or 0 for K)");
        }
    }
};

struct EvalRow
{
    double snr_db = 0.0;
    std::string estimator;
    double nmse = 0.0;
    double mean_k_hat = 0.0;
    double mean_steps = 0.0;
    double mean_nfe = 0.0;
    double wall_time_s = 0.0;
};

using EvalReport = std::vector<EvalRow>;

// What the sweep needs besides the configuration. SBM estimators look up
// their checkpoint by estimator id first, then fall back to `default_model`.
struct SweepResources
{
    const ChannelDataset *test = nullptr;
    std::optional<CMatrix> sample_cov;
    std::map<std::string, GmmPrior> priors; // by estimator id
    std::map<std::string, Checkpoint> models; // by estimator id
    const Checkpoint *default_model = nullptr;
    Pilot pilot;
};

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn &&fn)
{
    if (workers <= 1 || n <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    for (std::size_t t = 0; t < w; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += w)
                fn(i);
        });
    for (auto &th : pool)
        th.join();
}

inline double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

// Noisy decorrelated observations A^H y of the first m test channels at
// one SNR. The noise of (snr_index, sample) is seeded by
// hash(seed, snr_index, sample); every estimator sees the same data.
inline CMatrix sweep_observations(const CMatrix &truth, Eigen::Index n_rx, const Pilot &pilot, double eta_sq,
                                  std::uint64_t seed, std::size_t snr_index)
{
    CMatrix out(truth.rows(), truth.cols());
    for (Eigen::Index m = 0; m < truth.cols(); ++m)
    {
        Rng rng(derive_seed(seed, snr_index, static_cast<std::uint64_t>(m)));
        out.col(m) = decorrelate(observe(truth.col(m), n_rx, pilot, eta_sq, rng));
    }
    return out;
}

inline const Checkpoint &model_for(const EstimatorSpec &spec, const SweepResources &res)
{
    if (auto it = res.models.find(spec.id); it != res.models.end())
        return it->second;
    require(res.default_model != nullptr, ErrorKind::Config,
            "sweep: estimator '" + spec.id + "' needs a trained model but none was provided");
    return *res.default_model;
}

inline EvalReport run_sweep(const SweepConfig &cfg, const SweepResources &res)
{
    cfg.validate();
    require(res.test != nullptr, ErrorKind::Config, "sweep: no test dataset");
    const ChannelDataset &test = *res.test;
    require(test.domain == Domain::Spatial, ErrorKind::Parameter, "sweep: test dataset must be in the spatial domain");
    const Eigen::Index m = cfg.m_test == 0 ? test.size() : std::min(cfg.m_test, test.size());
    require(m >= 1, ErrorKind::Parameter, "sweep: empty test dataset");
    const CMatrix truth = test.samples.leftCols(m);
    const Pilot pilot = res.pilot.n_tx() == 0 ? Pilot::dft(test.n_tx) : res.pilot;
    const Beamspace bs(test.n_rx, test.n_tx);

    for (const auto &spec : cfg.estimators)
    {
        if (spec.kind == EstimatorKind::ScovLmmse)
            require(res.sample_cov.has_value(), ErrorKind::Config, "sweep: '" + spec.id + "' needs a sample covariance");
        if (spec.kind == EstimatorKind::Gmm)
            require(res.priors.count(spec.id) == 1, ErrorKind::Config, "sweep: '" + spec.id + "' needs a fitted GMM");
        if (spec.kind == EstimatorKind::Sbm)
        {
            const Checkpoint &ck = model_for(spec, res);
            require(ck.model.arch().n_rx == test.n_rx && ck.model.arch().n_tx == test.n_tx, ErrorKind::Config,
                    "sweep: model of '" + spec.id + "' does not match the test antenna dims");
            if (spec.gamma)
                require(std::abs(*spec.gamma - ck.schedule.gamma()) < 1e-12, ErrorKind::Config,
                        "sweep: '" + spec.id + "' requests gamma " + csv::number(*spec.gamma) +
                            " but its checkpoint was trained with gamma " + csv::number(ck.schedule.gamma()));
        }
    }

    constexpr Eigen::Index chunk = 128;
    const auto n_chunks = static_cast<std::size_t>((m + chunk - 1) / chunk);
    EvalReport report;
    for (std::size_t si = 0; si < cfg.snr_grid_db.size(); ++si)
    {
        const double snr_db = cfg.snr_grid_db[si];
        const double eta_sq = 1.0 / db_to_linear(snr_db);
        const CMatrix y = sweep_observations(truth, test.n_rx, pilot, eta_sq, cfg.seed, si);

        for (const auto &spec : cfg.estimators)
        {
            CMatrix est(truth.rows(), m);
            std::vector<double> chunk_times(n_chunks, 0.0);
            std::vector<int> chunk_khat(n_chunks, 0), chunk_steps(n_chunks, 0), chunk_nfe(n_chunks, 0);

            std::optional<LmmseFilter> lmmse;
            std::optional<GmmFilter> gmm;
            if (spec.kind == EstimatorKind::ScovLmmse)
                lmmse.emplace(*res.sample_cov, eta_sq);
            if (spec.kind == EstimatorKind::Gmm)
                gmm.emplace(res.priors.at(spec.id), eta_sq);

            detail::parallel_for(n_chunks, cfg.workers, [&](std::size_t c) {
                const Eigen::Index start = static_cast<Eigen::Index>(c) * chunk;
                const Eigen::Index len = std::min(chunk, m - start);
                const CMatrix yc = y.middleCols(start, len);
                const auto t0 = std::chrono::steady_clock::now();
                switch (spec.kind)
                {
                case EstimatorKind::Ls:
                    est.middleCols(start, len) = yc;
                    break;
                case EstimatorKind::ScovLmmse:
                    est.middleCols(start, len) = lmmse->apply(yc);
                    break;
                case EstimatorKind::Gmm:
                    est.middleCols(start, len) = gmm->estimate_columns(yc).estimates;
                    break;
                case EstimatorKind::Sbm: {
                    const Checkpoint &ck = model_for(spec, res);
                    const int delta = spec.delta == 0 ? ck.schedule.steps() : spec.delta;
                    NetworkScore s(ck.model);
                    const BatchEstimate b = sbm_estimate_columns(yc, eta_sq, s, ck.schedule, delta, bs);
                    est.middleCols(start, len) = b.h;
                    chunk_khat[c] = b.k_hat;
                    chunk_steps[c] = b.steps;
                    chunk_nfe[c] = static_cast<int>(s.evaluations());
                    break;
                }
                }
                chunk_times[c] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / static_cast<double>(len);
            });

            EvalRow row;
            row.snr_db = snr_db;
            row.estimator = spec.id;
            row.nmse = nmse(truth, est);
            // all samples of one SNR share eta^2, hence k_hat and the step count
            row.mean_k_hat = chunk_khat.front();
            row.mean_steps = chunk_steps.front();
            row.mean_nfe = chunk_nfe.front();
            row.wall_time_s = cfg.measure_wall_time ? detail::median(chunk_times) : 0.0;
            report.push_back(row);
        }
    }
    return report;
}

// ---------- per-step traces ----------

struct TracePoint
{
    int k = 0;         // step whose update produced this estimate
    double nmse = 0.0; // of the inverse-transformed estimate
};

struct PerStepTrace
{
    double initial_nmse = 0.0;     // decorrelated observation (LS)
    std::vector<TracePoint> steps; // one entry per update, length k_hat
};

template <ScoreFunction F>
PerStepTrace per_step_trace(const PilotObservation &obs, const CVector &truth, F &score_fn, const NoiseSchedule &sched)
{
    const Beamspace bs(obs.n_rx, obs.n_tx);
    const CMatrix y = decorrelate(obs);
    PerStepTrace trace;
    trace.initial_nmse = nmse(truth, y);
    sbm_estimate_columns(y, obs.eta_sq, score_fn, sched, 1, bs, [&](int k, const CMatrix &h) {
        trace.steps.push_back({k, nmse(truth, bs.inverse_columns(h))});
    });
    return trace;
}

inline PerStepTrace per_step_trace(const PilotObservation &obs, const CVector &truth, const ScoreModel &model,
                                   const NoiseSchedule &sched)
{
    require_compatible(model, sched, obs);
    NetworkScore s(model);
    return per_step_trace(obs, truth, s, sched);
}

// k_hat for every grid SNR under one schedule (step-count tables).
inline std::vector<int> initial_steps_over_grid(const NoiseSchedule &sched, const std::vector<double> &snr_grid_db)
{
    std::vector<int> out;
    for (double snr : snr_grid_db)
        out.push_back(initial_step(1.0 / db_to_linear(snr), sched));
    return out;
}

// ---------- CSV ----------

inline constexpr const char *report_header = "snr_db,estimator,nmse,mean_k_hat,mean_steps,mean_nfe,wall_time_s";

inline EvalReport sorted_report(EvalReport report)
{
    std::stable_sort(report.begin(), report.end(), [](const EvalRow &a, const EvalRow &b) {
        return std::tie(a.estimator, a.snr_db) < std::tie(b.estimator, b.snr_db);
    });
    return report;
}

inline void emit_csv(const EvalReport &report, const std::string &path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
    out << report_header << '\n';
    for (const auto &r : sorted_report(report))
        out << csv::number(r.snr_db) << ',' << r.estimator << ',' << csv::number(r.nmse) << ','
            << csv::number(r.mean_k_hat) << ',' << csv::number(r.mean_steps) << ',' << csv::number(r.mean_nfe) << ','
            << csv::number(r.wall_time_s) << '\n';
    out.flush();
    require(static_cast<bool>(out), ErrorKind::Io, "write to '" + path + "' failed");
}

inline EvalReport parse_csv(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && line == report_header, ErrorKind::Format,
            "'" + path + "' does not start with the report header");
    EvalReport report;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        const auto f = csv::split_line(line);
        require(f.size() == 7, ErrorKind::Format, "'" + path + "': expected 7 columns, got " + std::to_string(f.size()));
        report.push_back({csv::parse_number(f[0]), f[1], csv::parse_number(f[2]), csv::parse_number(f[3]),
                          csv::parse_number(f[4]), csv::parse_number(f[5]), csv::parse_number(f[6])});
    }
    return report;
}

} // namespace sbmce
