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

// Run configuration: a JSON document whose sections mirror the library
// structs. Every key is optional; missing keys keep the defaults below
// (K = 100, SNR range 40 / -22 dB, gamma = 1). Unknown keys are rejected.

#pragma once

#include "channel.hpp"
#include "eval.hpp"
#include "gmm.hpp"
#include "schedule.hpp"
#include "scorenet.hpp"
#include "training.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <string>

namespace sbmce {

struct ScheduleConfig
{
    double snr_max_db = 40.0;
    double snr_min_db = -22.0;
    int steps = 100;
    double gamma = 1.0;

    NoiseSchedule build() const { return build_schedule(snr_max_db, snr_min_db, steps, gamma); }
};

struct DataConfig
{
    Eigen::Index m_train = 20000;
    Eigen::Index m_val = 2000;
    Eigen::Index m_test = 2000;
};

struct PathsConfig
{
    std::string data_dir = "data";
    std::string model_path = "model.sbmnn";
    std::string report_path = "report.csv";
    std::string train_report_path = "train_report.csv";
};

struct RunConfig
{
    ScenarioConfig scenario;
    DataConfig data;
    ScheduleConfig schedule;
    Architecture model;
    TrainConfig train;
    SweepConfig sweep;
    GmmFitOptions gmm_fit;
    std::uint64_t gmm_seed = 0;
    std::string pilot = "dft";
    PathsConfig paths;
    int workers = 1;

    void validate() const
    {
        scenario.validate();
        require(data.m_train >= 1 && data.m_val >= 1 && data.m_test >= 1, ErrorKind::Config,
                "data: m_train, m_val, m_test must be >= 1");
        require(schedule.steps >= 2, ErrorKind::Config, "schedule: K must be >= 2 (got " + std::to_string(schedule.steps) + ")");
        require(schedule.gamma > 0.0, ErrorKind::Config, "schedule: gamma must be > 0 (got " + csv::number(schedule.gamma) + ")");
        require(schedule.snr_max_db > schedule.snr_min_db, ErrorKind::Config,
                "schedule: snr_max_db must exceed snr_min_db");
        model.validate();
        train.validate();
        sweep.validate();
        require(pilot == "dft" || pilot == "identity", ErrorKind::Config, "pilot must be 'dft' or 'identity'");
        require(workers >= 1, ErrorKind::Config, "workers must be >= 1");
        require(gmm_fit.max_iterations >= 1 && gmm_fit.tolerance > 0.0, ErrorKind::Config,
                "gmm: max_iterations must be >= 1 and tolerance > 0");
    }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json &j, const std::string &section, std::initializer_list<const char *> allowed)
{
    require(j.is_object(), ErrorKind::Config, "'" + section + "' must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto &item : j.items())
        require(ok.count(item.key()) == 1, ErrorKind::Config,
                "unknown key '" + item.key() + "' in section '" + section + "'");
}

template <typename T>
void read(const json &j, const char *key, T &out)
{
    if (!j.contains(key))
        return;
    try
    {
        out = j.at(key).get<T>();
    }
    catch (const json::exception &e)
    {
        fail(ErrorKind::Config, std::string("key '") + key + "': " + e.what());
    }
}

inline EstimatorSpec parse_estimator(const json &j)
{
    check_keys(j, "sweep.estimators[]", {"id", "kind", "delta", "gamma", "model", "components", "rx_components", "tx_components"});
    EstimatorSpec e;
    std::string kind = "ls";
    read(j, "id", e.id);
    read(j, "kind", kind);
    if (kind == "ls")
        e.kind = EstimatorKind::Ls;
    else if (kind == "scov")
        e.kind = EstimatorKind::ScovLmmse;
    else if (kind == "gmm")
    {
        e.kind = EstimatorKind::Gmm;
        e.gmm.structure = GmmStructure::Full;
    }
    else if (kind == "gmm-kron")
    {
        e.kind = EstimatorKind::Gmm;
        e.gmm.structure = GmmStructure::Kronecker;
    }
    else if (kind == "sbm")
        e.kind = EstimatorKind::Sbm;
    else
        fail(ErrorKind::Config, "unknown estimator kind '" + kind + "' (expected ls, scov, gmm, gmm-kron, sbm)");
    if (j.contains("delta"))
    {
        if (j.at("delta").is_string())
        {
            require(j.at("delta").get<std::string>() == "max", ErrorKind::Config, "delta must be an integer or \"max\"");
            e.delta = 0;
        }
        else
        {
            read(j, "delta", e.delta);
            require(e.delta >= 1, ErrorKind::Config, "delta must be >= 1");
        }
    }
    if (j.contains("gamma"))
    {
        double g = 0.0;
        read(j, "gamma", g);
        e.gamma = g;
    }
    read(j, "model", e.model_path);
    read(j, "components", e.gmm.n_components);
    read(j, "rx_components", e.gmm.n_rx_components);
    read(j, "tx_components", e.gmm.n_tx_components);
    if (e.id.empty())
        e.id = kind;
    return e;
}

} // namespace detail

inline std::vector<EstimatorSpec> default_estimators()
{
    using detail::json;
    const json j = json::parse(R"([
        {"id": "LS", "kind": "ls"},
        {"id": "SCov-LMMSE", "kind": "scov"},
        {"id": "GMM", "kind": "gmm", "components": 64},
        {"id": "GMM-kron", "kind": "gmm-kron", "rx_components": 8, "tx_components": 8},
        {"id": "SBM", "kind": "sbm", "delta": 1},
        {"id": "SBM-delta2", "kind": "sbm", "delta": 2},
        {"id": "SBM-delta4", "kind": "sbm", "delta": 4},
        {"id": "SBM-delta8", "kind": "sbm", "delta": 8},
        {"id": "SBM-delta16", "kind": "sbm", "delta": 16},
        {"id": "SBM-single-step", "kind": "sbm", "delta": "max"}
    ])");
    std::vector<EstimatorSpec> out;
    for (const auto &e : j)
        out.push_back(detail::parse_estimator(e));
    return out;
}

inline RunConfig parse_config(const nlohmann::json &root)
{
    using detail::check_keys;
    using detail::read;
    RunConfig c;
    c.sweep.estimators = default_estimators();
    check_keys(root, "<root>", {"scenario", "data", "schedule", "model", "train", "sweep", "gmm", "pilot", "paths", "workers"});

    if (root.contains("scenario"))
    {
        const auto &j = root.at("scenario");
        check_keys(j, "scenario", {"n_rx", "n_tx", "sector_halfangle_deg", "n_paths", "rician_k_db_range", "angle_spread_deg", "seed"});
        read(j, "n_rx", c.scenario.n_rx);
        read(j, "n_tx", c.scenario.n_tx);
        read(j, "sector_halfangle_deg", c.scenario.sector_halfangle_deg);
        read(j, "n_paths", c.scenario.n_paths);
        read(j, "rician_k_db_range", c.scenario.rician_k_db_range);
        read(j, "angle_spread_deg", c.scenario.angle_spread_deg);
        read(j, "seed", c.scenario.seed);
    }
    if (root.contains("data"))
    {
        const auto &j = root.at("data");
        check_keys(j, "data", {"m_train", "m_val", "m_test"});
        read(j, "m_train", c.data.m_train);
        read(j, "m_val", c.data.m_val);
        read(j, "m_test", c.data.m_test);
    }
    if (root.contains("schedule"))
    {
        const auto &j = root.at("schedule");
        check_keys(j, "schedule", {"snr_max_db", "snr_min_db", "K", "gamma"});
        read(j, "snr_max_db", c.schedule.snr_max_db);
        read(j, "snr_min_db", c.schedule.snr_min_db);
        read(j, "K", c.schedule.steps);
        read(j, "gamma", c.schedule.gamma);
    }
    if (root.contains("model"))
    {
        const auto &j = root.at("model");
        check_keys(j, "model", {"embed_dim", "embed_channels", "hidden", "kernel", "activation", "input_scaling"});
        read(j, "embed_dim", c.model.embed_dim);
        read(j, "embed_channels", c.model.embed_channels);
        read(j, "hidden", c.model.hidden);
        read(j, "kernel", c.model.kernel);
        std::string act = to_string(c.model.activation);
        read(j, "activation", act);
        c.model.activation = parse_activation(act);
        read(j, "input_scaling", c.model.input_scaling);
    }
    if (root.contains("train"))
    {
        const auto &j = root.at("train");
        check_keys(j, "train", {"batch_size", "max_epochs", "lr", "weight_decay", "lr_decay_factor", "lr_patience", "patience", "n_restarts", "seed"});
        read(j, "batch_size", c.train.batch_size);
        read(j, "max_epochs", c.train.max_epochs);
        read(j, "lr", c.train.lr);
        read(j, "weight_decay", c.train.weight_decay);
        read(j, "lr_decay_factor", c.train.lr_decay_factor);
        read(j, "lr_patience", c.train.lr_patience);
        read(j, "patience", c.train.patience);
        read(j, "n_restarts", c.train.n_restarts);
        read(j, "seed", c.train.seed);
    }
    if (root.contains("sweep"))
    {
        const auto &j = root.at("sweep");
        check_keys(j, "sweep", {"snr_grid_db", "estimators", "m_test", "seed", "measure_wall_time"});
        if (j.contains("snr_grid_db"))
        {
            const auto &g = j.at("snr_grid_db");
            if (g.is_object())
            {
                check_keys(g, "sweep.snr_grid_db", {"start", "stop", "step"});
                double start = -15.0, stop = 20.0, step = 2.5;
                read(g, "start", start);
                read(g, "stop", stop);
                read(g, "step", step);
                c.sweep.snr_grid_db = snr_range(start, stop, step);
            }
            else
                read(j, "snr_grid_db", c.sweep.snr_grid_db);
        }
        if (j.contains("estimators"))
        {
            require(j.at("estimators").is_array(), ErrorKind::Config, "sweep.estimators must be an array");
            c.sweep.estimators.clear();
            for (const auto &e : j.at("estimators"))
                c.sweep.estimators.push_back(detail::parse_estimator(e));
        }
        read(j, "m_test", c.sweep.m_test);
        read(j, "seed", c.sweep.seed);
        read(j, "measure_wall_time", c.sweep.measure_wall_time);
    }
    if (root.contains("gmm"))
    {
        const auto &j = root.at("gmm");
        check_keys(j, "gmm", {"max_iterations", "tolerance", "covariance_floor", "seed"});
        read(j, "max_iterations", c.gmm_fit.max_iterations);
        read(j, "tolerance", c.gmm_fit.tolerance);
        read(j, "covariance_floor", c.gmm_fit.covariance_floor);
        read(j, "seed", c.gmm_seed);
    }
    read(root, "pilot", c.pilot);
    if (root.contains("paths"))
    {
        const auto &j = root.at("paths");
        check_keys(j, "paths", {"data_dir", "model_path", "report_path", "train_report_path"});
        read(j, "data_dir", c.paths.data_dir);
        read(j, "model_path", c.paths.model_path);
        read(j, "report_path", c.paths.report_path);
        read(j, "train_report_path", c.paths.train_report_path);
    }
    read(root, "workers", c.workers);
    c.sweep.workers = c.workers;
    c.model.n_rx = c.scenario.n_rx;
    c.model.n_tx = c.scenario.n_tx;
    c.validate();
    return c;
}

inline RunConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Config, "cannot open config file '" + path + "'");
    nlohmann::json root;
    try
    {
        root = nlohmann::json::parse(in, nullptr, true, true);
    }
    catch (const nlohmann::json::exception &e)
    {
        fail(ErrorKind::Config, "'" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(root);
}

} // namespace sbmce
