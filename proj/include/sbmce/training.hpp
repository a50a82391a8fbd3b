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

// Denoising score matching on beamspace channels: for every sample draw
// k ~ U{1..K} and z ~ CN(0, I), perturb h_k = h_0 + sigma_k z and regress
// eps_theta(h_k, k) onto z. Restarts are selected by validation loss.

#pragma once

#include "channel.hpp"
#include "csv.hpp"
#include "scorenet.hpp"

#include <cassert>
#include <chrono>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

namespace sbmce {

struct TrainConfig
{
    int batch_size = 128;
    int max_epochs = 200;
    double lr = 2e-3;
    double weight_decay = 1e-4;
    double lr_decay_factor = 0.5; // plateau halving
    int lr_patience = 3;
    int patience = 10; // early stopping on validation loss
    int n_restarts = 5;
    std::uint64_t seed = 0;

    void validate() const
    {
        require(batch_size >= 1 && max_epochs >= 1 && patience >= 1 && lr_patience >= 1 && n_restarts >= 1,
                ErrorKind::Config, "train: batch_size, max_epochs, patience, lr_patience, n_restarts must be >= 1");
        require(lr > 0.0 && weight_decay >= 0.0, ErrorKind::Config, "train: lr must be > 0 and weight_decay >= 0");
        require(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0, ErrorKind::Config,
                "train: lr_decay_factor must lie in (0, 1]");
    }
};

struct EpochRecord
{
    int restart = 1; // 1-based
    int epoch = 1;   // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainReport
{
    std::vector<EpochRecord> epochs;
    std::vector<double> best_val_loss; // per restart
    int selected_restart = 0;          // 1-based
    double wall_time_s = 0.0;
};

// Stops once `patience` consecutive epochs fail to improve on the best loss.
class EarlyStopping
{
  public:
    explicit EarlyStopping(int patience) : patience_(patience) {}

    // Returns true when training should stop after this epoch.
    bool update(double val_loss)
    {
        if (val_loss < best_)
        {
            best_ = val_loss;
            since_best_ = 0;
            return false;
        }
        return ++since_best_ >= patience_;
    }

    bool last_was_best() const noexcept { return since_best_ == 0; }
    double best() const noexcept { return best_; }

  private:
    int patience_;
    int since_best_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

// Multiplies the learning rate by `factor` after `patience` epochs without improvement.
class PlateauLr
{
  public:
    PlateauLr(double factor, int patience) : factor_(factor), patience_(patience) {}

    void update(double val_loss, double &lr)
    {
        if (val_loss < best_)
        {
            best_ = val_loss;
            bad_ = 0;
            return;
        }
        if (++bad_ >= patience_)
        {
            lr *= factor_;
            bad_ = 0;
        }
    }

  private:
    double factor_;
    int patience_;
    int bad_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

// 1-based index of the smallest validation loss; ties keep the earliest.
inline int select_best_restart(std::span<const double> val_losses)
{
    require(!val_losses.empty(), ErrorKind::Parameter, "select_best_restart: no restarts");
    const auto it = std::min_element(val_losses.begin(), val_losses.end());
    return static_cast<int>(it - val_losses.begin()) + 1;
}

// Perturbs the listed beamspace samples with freshly drawn (k, z).
inline TrainingBatch make_dsm_batch(const ChannelDataset &ds, std::span<const Eigen::Index> indices,
                                    const NoiseSchedule &sched, Rng &rng)
{
    const Eigen::Index n = ds.dim();
    const auto b = static_cast<Eigen::Index>(indices.size());
    TrainingBatch batch;
    batch.inputs.resize(b * n, 2);
    batch.targets.resize(b * n, 2);
    batch.steps.resize(indices.size());
    batch.sigmas.resize(indices.size());
    for (Eigen::Index i = 0; i < b; ++i)
    {
        const int k = rng.uniform_int(1, sched.steps());
        const double sigma = sched.sigma(k);
        const CVector z = draw_circular_gaussian(n, 1.0, rng);
        const CVector h0 = ds.samples.col(indices[static_cast<std::size_t>(i)]);
#ifndef NDEBUG
        // surrogate score s = -z / sigma_k; the eps target is -sigma_k s
        const CVector s = -z / sigma;
        assert(((-sigma * s) - z).norm() <= 1e-12 * (1.0 + z.norm()));
#endif
        const CVector hk = h0 + sigma * z;
        for (Eigen::Index p = 0; p < n; ++p)
        {
            batch.inputs(i * n + p, 0) = hk[p].real();
            batch.inputs(i * n + p, 1) = hk[p].imag();
            batch.targets(i * n + p, 0) = z[p].real();
            batch.targets(i * n + p, 1) = z[p].imag();
        }
        batch.steps[static_cast<std::size_t>(i)] = k;
        batch.sigmas[static_cast<std::size_t>(i)] = sigma;
    }
    return batch;
}

inline void require_beamspace(const ChannelDataset &ds, const char *what)
{
    require(ds.domain == Domain::Beamspace, ErrorKind::Parameter,
            std::string(what) + ": dataset must be in the beamspace domain (got " + to_string(ds.domain) + ")");
    require(!ds.empty(), ErrorKind::Parameter, std::string(what) + ": empty dataset");
}

inline void require_matching(const ScoreModel &model, const NoiseSchedule &sched, const ChannelDataset &ds)
{
    require(model.steps() == sched.steps(), ErrorKind::Parameter, "schedule K does not match the model");
    require(model.arch().n_rx == ds.n_rx && model.arch().n_tx == ds.n_tx, ErrorKind::Dimension,
            "dataset antenna dims do not match the model");
}

struct EpochResult
{
    double loss = 0.0;
    std::vector<int> drawn_steps; // every k drawn during the epoch
};

// One shuffled pass over the training set; returns the sample-weighted mean loss.
inline EpochResult dsm_epoch(ScoreModel &model, const ChannelDataset &train_ds, const NoiseSchedule &sched,
                             OptimizerState &opt, Rng &rng, int batch_size)
{
    require_beamspace(train_ds, "dsm_epoch");
    require_matching(model, sched, train_ds);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(train_ds.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng.engine());

    EpochResult result;
    result.drawn_steps.reserve(order.size());
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size))
    {
        const std::size_t len = std::min(static_cast<std::size_t>(batch_size), order.size() - start);
        const TrainingBatch batch = make_dsm_batch(train_ds, std::span(order).subspan(start, len), sched, rng);
        const LossAndGrad lg = loss_and_grad(model, batch);
        require(std::isfinite(lg.loss), ErrorKind::Numeric, "dsm_epoch: non-finite training loss");
        optimizer_step(model, lg.grads, opt);
        total += lg.loss * static_cast<double>(len);
        result.drawn_steps.insert(result.drawn_steps.end(), batch.steps.begin(), batch.steps.end());
    }
    result.loss = total / static_cast<double>(order.size());
    return result;
}

// DSM loss on held-out data with noise drawn from a fixed seed, so values
// are comparable across epochs.
inline double val_loss(const ScoreModel &model, const ChannelDataset &val_ds, const NoiseSchedule &sched,
                       std::uint64_t noise_seed, int batch_size = 256)
{
    require_beamspace(val_ds, "val_loss");
    require_matching(model, sched, val_ds);
    Rng rng(noise_seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(val_ds.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size))
    {
        const std::size_t len = std::min(static_cast<std::size_t>(batch_size), order.size() - start);
        const TrainingBatch batch = make_dsm_batch(val_ds, std::span(order).subspan(start, len), sched, rng);
        total += batch_loss(model, batch) * static_cast<double>(len);
    }
    return total / static_cast<double>(order.size());
}

struct TrainResult
{
    ScoreModel model;
    TrainReport report;
};

inline TrainResult train(const ChannelDataset &train_ds, const ChannelDataset &val_ds, const NoiseSchedule &sched,
                         const Architecture &arch, const TrainConfig &cfg, std::ostream *log = nullptr)
{
    cfg.validate();
    require_beamspace(train_ds, "train");
    require_beamspace(val_ds, "train");
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t val_seed = derive_seed(cfg.seed, 0x7661u);

    TrainResult best{ScoreModel(arch, sched.steps()), {}};
    for (int restart = 1; restart <= cfg.n_restarts; ++restart)
    {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(restart)));
        ScoreModel model(arch, sched.steps());
        model.init_random(rng);
        OptimizerState opt = OptimizerState::for_model(model, cfg.lr, cfg.weight_decay);
        EarlyStopping stopper(cfg.patience);
        PlateauLr plateau(cfg.lr_decay_factor, cfg.lr_patience);
        std::vector<Tensor> best_params = model.params();

        for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch)
        {
            const EpochResult er = dsm_epoch(model, train_ds, sched, opt, rng, cfg.batch_size);
            const double vl = val_loss(model, val_ds, sched, val_seed);
            require(std::isfinite(vl), ErrorKind::Numeric, "train: non-finite validation loss");
            best.report.epochs.push_back({restart, epoch, er.loss, vl, opt.lr});
            if (log)
                *log << "restart " << restart << " epoch " << epoch << " train " << er.loss << " val " << vl
                     << " lr " << opt.lr << '\n'
                     << std::flush;
            const bool stop = stopper.update(vl);
            if (stopper.last_was_best())
                best_params = model.params();
            if (stop)
                break;
            plateau.update(vl, opt.lr);
        }
        model.params() = best_params;
        best.report.best_val_loss.push_back(stopper.best());
        if (select_best_restart(best.report.best_val_loss) == restart)
            best.model = model;
    }
    best.report.selected_restart = select_best_restart(best.report.best_val_loss);
    best.report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return best;
}

inline void write_train_report_csv(const TrainReport &report, const std::string &path)
{
    std::ofstream out(path, std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
    out << "epoch,train_loss,val_loss,restart\n";
    for (const auto &e : report.epochs)
        out << e.epoch << ',' << csv::number(e.train_loss) << ',' << csv::number(e.val_loss) << ',' << e.restart
            << '\n';
    out.flush();
    require(static_cast<bool>(out), ErrorKind::Io, "write to '" + path + "' failed");
}

} // namespace sbmce
