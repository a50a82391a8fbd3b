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

// The four commands behind the `sbmce` tool. Each takes the config path plus
// optional path/seed overrides and returns a process exit status
// (0 ok, 2 config, 3 I/O or format, 4 numeric).

#pragma once

#include "config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace sbmce {

// Keeps large per-batch work buffers on the heap instead of returning them
// to the kernel after every batch.
inline void tune_allocator()
{
#ifdef __GLIBC__
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
#endif
}

struct CliOverrides
{
    std::optional<std::string> data_dir;
    std::optional<std::string> model_path;
    std::optional<std::string> report_path;
    std::optional<std::uint64_t> seed;
};

struct CliStreams
{
    std::ostream &out = std::cout;
    std::ostream &err = std::cerr;
};

namespace detail {

inline RunConfig load_with_overrides(const std::string &config_path, const CliOverrides &o)
{
    RunConfig c = load_config(config_path);
    if (o.data_dir)
        c.paths.data_dir = *o.data_dir;
    if (o.model_path)
        c.paths.model_path = *o.model_path;
    if (o.report_path)
        c.paths.report_path = *o.report_path;
    if (o.seed)
    {
        c.scenario.seed = *o.seed;
        c.train.seed = *o.seed;
        c.sweep.seed = *o.seed;
        c.gmm_seed = *o.seed;
    }
    return c;
}

inline std::string split_path(const RunConfig &c, const char *split)
{
    return (std::filesystem::path(c.paths.data_dir) / (std::string(split) + ".sbmch")).string();
}

inline ChannelDataset load_split(const RunConfig &c, const char *split)
{
    const std::string path = split_path(c, split);
    require(std::filesystem::exists(path), ErrorKind::Io,
            "dataset '" + path + "' not found; run `sbmce gen-data` first");
    ChannelDataset ds = load_dataset(path);
    require(ds.n_rx == c.scenario.n_rx && ds.n_tx == c.scenario.n_tx, ErrorKind::Dimension,
            "dataset '" + path + "' is " + std::to_string(ds.n_rx) + "x" + std::to_string(ds.n_tx) +
                " but the config scenario is " + std::to_string(c.scenario.n_rx) + "x" + std::to_string(c.scenario.n_tx));
    return ds;
}

inline Pilot make_pilot(const RunConfig &c)
{
    return c.pilot == "identity" ? Pilot::identity(c.scenario.n_tx) : Pilot::dft(c.scenario.n_tx);
}

inline std::string gmm_cache_path(const RunConfig &c, const GmmSpec &spec)
{
    std::string name = spec.structure == GmmStructure::Full
                           ? "gmm-full-" + std::to_string(spec.n_components)
                           : "gmm-kron-" + std::to_string(spec.n_rx_components) + "x" + std::to_string(spec.n_tx_components);
    name += "-seed" + std::to_string(c.gmm_seed) + ".sbmgm";
    return (std::filesystem::path(c.paths.data_dir) / name).string();
}

// Fitted priors are cached next to the datasets; gen-data clears the cache.
inline GmmPrior gmm_prior_for(const RunConfig &c, const GmmSpec &spec, const ChannelDataset &train_ds, std::ostream &log)
{
    const std::string path = gmm_cache_path(c, spec);
    if (std::filesystem::exists(path))
        return load_gmm(path);
    log << "fitting " << std::filesystem::path(path).stem().string() << " on " << train_ds.size() << " samples\n";
    Rng rng(derive_seed(c.gmm_seed, static_cast<std::uint64_t>(spec.structure), static_cast<std::uint64_t>(spec.n_components),
                        static_cast<std::uint64_t>(spec.n_rx_components), static_cast<std::uint64_t>(spec.n_tx_components)));
    GmmPrior prior = gmm_fit(train_ds, spec, rng, c.gmm_fit);
    save_gmm(prior, path);
    return prior;
}

inline nlohmann::json complex_to_json(const CVector &v)
{
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
        re.push_back(v[i].real());
        im.push_back(v[i].imag());
    }
    return {{"re", re}, {"im", im}};
}

inline CVector complex_from_json(const nlohmann::json &j, const char *what)
{
    require(j.is_object() && j.contains("re") && j.contains("im") && j.at("re").is_array() && j.at("im").is_array(),
            ErrorKind::Format, std::string("observation field '") + what + "' must be {\"re\": [...], \"im\": [...]}");
    const auto &re = j.at("re");
    const auto &im = j.at("im");
    require(re.size() == im.size(), ErrorKind::Format, std::string("observation field '") + what + "': re/im lengths differ");
    CVector v(static_cast<Eigen::Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i)
    {
        require(re[i].is_number() && im[i].is_number(), ErrorKind::Format,
                std::string("observation field '") + what + "' has a non-numeric entry");
        v[static_cast<Eigen::Index>(i)] = Complex(re[i].get<double>(), im[i].get<double>());
    }
    return v;
}

inline void write_text(const std::string &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::Io, "write to '" + path + "' failed");
}

inline void ensure_parent(const std::string &path)
{
    const auto parent = std::filesystem::path(path).parent_path();
    if (parent.empty())
        return;
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    require(!ec, ErrorKind::Io, "cannot create directory '" + parent.string() + "': " + ec.message());
}

template <typename Fn>
int guarded(std::ostream &err, Fn &&fn)
{
    try
    {
        fn();
        return 0;
    }
    catch (const Error &e)
    {
        err << e.what() << '\n';
        return exit_code(e.kind());
    }
    catch (const std::exception &e)
    {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace detail

// Observation file: JSON with n_rx, n_tx, eta_sq, y = vec(Y) column-major,
// and pilot either "dft", "identity" or an explicit {"re", "im"} matrix.
inline void save_observation(const PilotObservation &obs, const std::string &path)
{
    const CMatrix &p = obs.pilot.matrix();
    nlohmann::json j = {{"n_rx", obs.n_rx},
                        {"n_tx", obs.n_tx},
                        {"eta_sq", obs.eta_sq},
                        {"y", detail::complex_to_json(obs.y)},
                        {"pilot", detail::complex_to_json(Eigen::Map<const CVector>(p.data(), p.size()))}};
    detail::write_text(path, j.dump(2) + "\n");
}

inline PilotObservation load_observation(const std::string &path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open observation file '" + path + "'");
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::exception &e)
    {
        fail(ErrorKind::Format, "'" + path + "' is not valid JSON: " + e.what());
    }
    require(j.is_object(), ErrorKind::Format, "'" + path + "' must hold a JSON object");
    for (const char *key : {"n_rx", "n_tx", "eta_sq", "y"})
        require(j.contains(key), ErrorKind::Format, "'" + path + "' lacks the field '" + key + "'");
    require(j.at("n_rx").is_number_integer() && j.at("n_tx").is_number_integer() && j.at("eta_sq").is_number(),
            ErrorKind::Format, "'" + path + "': n_rx, n_tx must be integers and eta_sq a number");
    PilotObservation obs;
    obs.n_rx = j.at("n_rx").get<Eigen::Index>();
    obs.n_tx = j.at("n_tx").get<Eigen::Index>();
    obs.eta_sq = j.at("eta_sq").get<double>();
    require(obs.n_rx >= 1 && obs.n_tx >= 1, ErrorKind::Format, "'" + path + "': antenna counts must be >= 1");
    require(obs.eta_sq >= 0.0, ErrorKind::Format, "'" + path + "': eta_sq must be >= 0");
    obs.y = detail::complex_from_json(j.at("y"), "y");
    require(obs.y.size() == obs.n_rx * obs.n_tx, ErrorKind::Dimension,
            "'" + path + "': y has " + std::to_string(obs.y.size()) + " entries, expected n_rx * n_tx = " +
                std::to_string(obs.n_rx * obs.n_tx));
    const nlohmann::json pj = j.value("pilot", nlohmann::json("dft"));
    if (pj.is_string())
    {
        const auto name = pj.get<std::string>();
        require(name == "dft" || name == "identity", ErrorKind::Format, "'" + path + "': unknown pilot '" + name + "'");
        obs.pilot = name == "dft" ? Pilot::dft(obs.n_tx) : Pilot::identity(obs.n_tx);
    }
    else
    {
        const CVector flat = detail::complex_from_json(pj, "pilot");
        require(flat.size() == obs.n_tx * obs.n_tx, ErrorKind::Dimension, "'" + path + "': pilot must be n_tx x n_tx");
        try
        {
            obs.pilot = Pilot(Eigen::Map<const CMatrix>(flat.data(), obs.n_tx, obs.n_tx));
        }
        catch (const Error &e)
        {
            fail(ErrorKind::Format, "'" + path + "': " + e.what());
        }
    }
    return obs;
}

inline int cmd_gen_data(const std::string &config_path, const CliOverrides &o = {}, CliStreams io = {})
{
    return detail::guarded(io.err, [&] {
        const RunConfig c = detail::load_with_overrides(config_path, o);
        std::error_code ec;
        std::filesystem::create_directories(c.paths.data_dir, ec);
        require(!ec, ErrorKind::Io, "cannot create data directory '" + c.paths.data_dir + "': " + ec.message());
        for (const auto &entry : std::filesystem::directory_iterator(c.paths.data_dir))
            if (entry.path().extension() == ".sbmgm")
                std::filesystem::remove(entry.path());

        const DatasetSplits s = make_splits(c.scenario, c.data.m_train, c.data.m_val, c.data.m_test, Rng(c.scenario.seed));
        save_dataset(s.train, detail::split_path(c, "train"));
        save_dataset(s.val, detail::split_path(c, "val"));
        save_dataset(s.test, detail::split_path(c, "test"));
        const nlohmann::json norm = {{"scale", s.scale}, {"n_rx", c.scenario.n_rx}, {"n_tx", c.scenario.n_tx}};
        detail::write_text((std::filesystem::path(c.paths.data_dir) / "normalization.json").string(), norm.dump(2) + "\n");
        io.out << "wrote " << s.train.size() << "/" << s.val.size() << "/" << s.test.size() << " samples ("
               << c.scenario.n_rx << "x" << c.scenario.n_tx << ") to " << c.paths.data_dir << '\n';
    });
}

inline int cmd_train(const std::string &config_path, const CliOverrides &o = {}, CliStreams io = {})
{
    return detail::guarded(io.err, [&] {
        const RunConfig c = detail::load_with_overrides(config_path, o);
        const ChannelDataset train_ds = to_beamspace(detail::load_split(c, "train"));
        const ChannelDataset val_ds = to_beamspace(detail::load_split(c, "val"));
        const NoiseSchedule sched = c.schedule.build();
        const TrainResult r = train(train_ds, val_ds, sched, c.model, c.train, &io.err);
        detail::ensure_parent(c.paths.model_path);
        detail::ensure_parent(c.paths.train_report_path);
        save_model(r.model, sched, c.paths.model_path);
        write_train_report_csv(r.report, c.paths.train_report_path);
        io.out << "trained " << r.model.num_parameters() << " parameters; selected restart " << r.report.selected_restart
               << " (val loss " << r.report.best_val_loss[static_cast<std::size_t>(r.report.selected_restart - 1)]
               << "); model written to " << c.paths.model_path << '\n';
    });
}

inline int cmd_sweep(const std::string &config_path, const CliOverrides &o = {}, CliStreams io = {})
{
    return detail::guarded(io.err, [&] {
        const RunConfig c = detail::load_with_overrides(config_path, o);
        const ChannelDataset test = detail::load_split(c, "test");

        bool needs_train = false, needs_model = false;
        for (const auto &e : c.sweep.estimators)
        {
            needs_train |= e.kind == EstimatorKind::ScovLmmse || e.kind == EstimatorKind::Gmm;
            needs_model |= e.kind == EstimatorKind::Sbm && e.model_path.empty();
        }

        SweepResources res;
        res.test = &test;
        res.pilot = detail::make_pilot(c);
        if (needs_train)
        {
            const ChannelDataset train_ds = detail::load_split(c, "train");
            for (const auto &e : c.sweep.estimators)
            {
                if (e.kind == EstimatorKind::ScovLmmse && !res.sample_cov)
                    res.sample_cov = sample_covariance(train_ds);
                if (e.kind == EstimatorKind::Gmm)
                    res.priors.emplace(e.id, detail::gmm_prior_for(c, e.gmm, train_ds, io.err));
            }
        }
        std::optional<Checkpoint> default_model;
        if (needs_model)
        {
            require(std::filesystem::exists(c.paths.model_path), ErrorKind::Io,
                    "model '" + c.paths.model_path + "' not found; SBM estimators need `sbmce train` first");
            default_model = load_model(c.paths.model_path);
            res.default_model = &*default_model;
        }
        for (const auto &e : c.sweep.estimators)
            if (e.kind == EstimatorKind::Sbm && !e.model_path.empty())
                res.models.emplace(e.id, load_model(e.model_path));

        for (const auto &e : c.sweep.estimators)
        {
            if (e.kind != EstimatorKind::Sbm)
                continue;
            const NoiseSchedule &sched = model_for(e, res).schedule;
            for (double snr : c.sweep.snr_grid_db)
                if (!sched.covers(1.0 / db_to_linear(snr)))
                {
                    io.err << "warning: " << e.id << ": SNR " << csv::number(snr)
                           << " dB lies outside the schedule range; the initial step is clamped\n";
                    break;
                }
        }

        const EvalReport report = run_sweep(c.sweep, res);
        detail::ensure_parent(c.paths.report_path);
        emit_csv(report, c.paths.report_path);
        io.out << "wrote " << report.size() << " rows to " << c.paths.report_path << '\n';
    });
}

struct EstimateOptions
{
    std::string estimator = "SBM";   // id from the config's sweep.estimators
    std::optional<int> delta;        // SBM override; 0 selects K
    std::string output;              // default: <observation>.estimate.json
};

inline int cmd_estimate(const std::string &config_path, const std::string &observation_path,
                        const EstimateOptions &opt = {}, const CliOverrides &o = {}, CliStreams io = {})
{
    return detail::guarded(io.err, [&] {
        const RunConfig c = detail::load_with_overrides(config_path, o);
        const PilotObservation obs = load_observation(observation_path);
        const EstimatorSpec *spec = nullptr;
        for (const auto &e : c.sweep.estimators)
            if (e.id == opt.estimator)
                spec = &e;
        require(spec != nullptr, ErrorKind::Config, "estimator '" + opt.estimator + "' is not defined in sweep.estimators");

        EstimateResult r;
        switch (spec->kind)
        {
        case EstimatorKind::Ls:
            r = ls_estimate(obs);
            break;
        case EstimatorKind::ScovLmmse:
        case EstimatorKind::Gmm: {
            const ChannelDataset train_ds = detail::load_split(c, "train");
            require(train_ds.dim() == obs.y.size(), ErrorKind::Dimension, "observation dims do not match the training data");
            r = spec->kind == EstimatorKind::ScovLmmse ? scov_lmmse(obs, sample_covariance(train_ds))
                                                       : gmm_estimate(obs, detail::gmm_prior_for(c, spec->gmm, train_ds, io.err));
            break;
        }
        case EstimatorKind::Sbm: {
            const std::string path = spec->model_path.empty() ? c.paths.model_path : spec->model_path;
            require(std::filesystem::exists(path), ErrorKind::Io, "model '" + path + "' not found");
            const Checkpoint ck = load_model(path);
            int delta = opt.delta.value_or(spec->delta);
            if (delta == 0)
                delta = ck.schedule.steps();
            r = sbm_estimate(obs, ck.model, ck.schedule, delta);
            break;
        }
        }
        if (r.regularized && r.warning.empty())
            r.warning = "covariance solve was regularized";

        nlohmann::json warnings = nlohmann::json::array();
        if (!r.warning.empty())
        {
            warnings.push_back(r.warning);
            io.err << "warning: " << r.warning << '\n';
        }
        const nlohmann::json j = {{"estimator", spec->id}, {"k_hat", r.k_hat}, {"steps", r.steps},
                                  {"nfe", r.nfe},         {"warnings", warnings}, {"h", detail::complex_to_json(r.h)}};
        const std::string out_path = opt.output.empty() ? observation_path + ".estimate.json" : opt.output;
        detail::write_text(out_path, j.dump(2) + "\n");
        io.out << spec->id << ": k_hat " << r.k_hat << ", steps " << r.steps << ", nfe " << r.nfe << "; estimate written to "
               << out_path << '\n';
    });
}

} // namespace sbmce
