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

// Step-conditioned convolutional noise predictor eps_theta(h_k, k).
//
// A beamspace channel is viewed as a 2 x n_rx x n_tx real image (re, im).
// The step k enters through a sinusoidal embedding, an affine projection to
// `embed_channels` values, and a spatial broadcast that is concatenated to
// the image as extra input channels. The stack is a sequence of circularly
// padded 2D convolutions (the DFT grid is periodic) with a
// smooth activation between layers and 2 output channels.
//
// The score is returned as s = -eps / sigma_k. One set of weights serves all
// steps; k only enters via the embedding.
//
// Activations of a batch are kept as (B * P) x C matrices, P = n_rx * n_tx,
// row b * P + p holding position p (column-major over the n_rx x n_tx grid)
// of sample b. Convolutions are im2col + GEMM.

#pragma once

#include "binary_io.hpp"
#include "numerics.hpp"
#include "schedule.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sbmce {

enum class Activation : std::uint8_t { SiLU = 0, Tanh = 1 };

inline Activation parse_activation(const std::string &name)
{
    if (name == "silu")
        return Activation::SiLU;
    if (name == "tanh")
        return Activation::Tanh;
    fail(ErrorKind::Config, "unknown activation '" + name + "' (expected silu or tanh)");
}

inline const char *to_string(Activation a) { return a == Activation::SiLU ? "silu" : "tanh"; }

struct Architecture
{
    Eigen::Index n_rx = 16;
    Eigen::Index n_tx = 4;
    int embed_dim = 32;
    int embed_channels = 8;
    std::vector<int> hidden{32, 32};
    int kernel = 3;
    Activation activation = Activation::SiLU;
    // Inputs are scaled by 1/sqrt(1 + sigma_k^2), giving unit variance at every step.
    bool input_scaling = true;

    Eigen::Index positions() const noexcept { return n_rx * n_tx; }
    int num_conv() const noexcept { return static_cast<int>(hidden.size()) + 1; }
    int in_channels(int layer) const { return layer == 0 ? 2 + embed_channels : hidden[static_cast<std::size_t>(layer - 1)]; }
    int out_channels(int layer) const
    {
        return layer == num_conv() - 1 ? 2 : hidden[static_cast<std::size_t>(layer)];
    }

    void validate() const
    {
        require(n_rx >= 1 && n_tx >= 1, ErrorKind::Config, "model: antenna dims must be >= 1");
        require(embed_dim >= 2 && embed_dim % 2 == 0, ErrorKind::Config, "model: embed_dim must be even and >= 2");
        require(embed_channels >= 1, ErrorKind::Config, "model: embed_channels must be >= 1");
        require(kernel >= 1 && kernel % 2 == 1, ErrorKind::Config, "model: kernel size must be odd");
        for (int w : hidden)
            require(w >= 1, ErrorKind::Config, "model: hidden widths must be >= 1");
    }

    bool operator==(const Architecture &) const = default;
};

struct Tensor
{
    std::string name;
    std::vector<int> shape;
    RVector data;
};

// Sinusoidal embedding (sin(k w_i), cos(k w_i)) pairs, w_i = 10000^(-2i/dim).
inline RVector embed_step(int k, int num_steps, int dim)
{
    require(dim >= 2 && dim % 2 == 0, ErrorKind::Parameter, "embed_step: dim must be even");
    require(k >= 1 && k <= num_steps, ErrorKind::Parameter, "embed_step: k outside [1, K]");
    RVector e(dim);
    for (int i = 0; i < dim / 2; ++i)
    {
        const double freq = std::pow(10000.0, -2.0 * i / static_cast<double>(dim));
        e[2 * i] = std::sin(k * freq);
        e[2 * i + 1] = std::cos(k * freq);
    }
    return e;
}

class ScoreModel
{
  public:
    ScoreModel() = default;

    ScoreModel(Architecture arch, int num_steps) : arch_(std::move(arch)), steps_(num_steps)
    {
        arch_.validate();
        require(num_steps >= 2, ErrorKind::Parameter, "model: K must be >= 2");
        const int d = arch_.embed_dim;
        const int e = arch_.embed_channels;
        const int kk = arch_.kernel;
        params_.push_back({"embed.weight", {e, d}, RVector::Zero(e * d)});
        params_.push_back({"embed.bias", {e}, RVector::Zero(e)});
        for (int l = 0; l < arch_.num_conv(); ++l)
        {
            const int ci = arch_.in_channels(l);
            const int co = arch_.out_channels(l);
            params_.push_back({"conv" + std::to_string(l) + ".weight", {co, ci, kk, kk}, RVector::Zero(co * ci * kk * kk)});
            params_.push_back({"conv" + std::to_string(l) + ".bias", {co}, RVector::Zero(co)});
        }
        build_shift_tables();
    }

    const Architecture &arch() const noexcept { return arch_; }
    int steps() const noexcept { return steps_; }
    std::vector<Tensor> &params() noexcept { return params_; }
    const std::vector<Tensor> &params() const noexcept { return params_; }

    Eigen::Index num_parameters() const
    {
        Eigen::Index n = 0;
        for (const auto &p : params_)
            n += p.data.size();
        return n;
    }

    Tensor &param(const std::string &name)
    {
        for (auto &p : params_)
            if (p.name == name)
                return p;
        fail(ErrorKind::Parameter, "model has no parameter '" + name + "'");
    }

    void init_random(Rng &rng)
    {
        const int kk = arch_.kernel * arch_.kernel;
        for (auto &p : params_)
            p.data.setZero();
        auto &we = params_[0].data;
        for (Eigen::Index i = 0; i < we.size(); ++i)
            we[i] = rng.normal() / std::sqrt(static_cast<double>(arch_.embed_dim));
        for (int l = 0; l < arch_.num_conv(); ++l)
        {
            auto &w = conv_weight(l).data;
            const double fan_in = static_cast<double>(arch_.in_channels(l) * kk);
            const bool last = l == arch_.num_conv() - 1;
            const double stddev = std::sqrt((last ? 1.0 : 2.0) / fan_in);
            for (Eigen::Index i = 0; i < w.size(); ++i)
                w[i] = stddev * rng.normal();
        }
    }

    Tensor &conv_weight(int l) { return params_[static_cast<std::size_t>(2 + 2 * l)]; }
    const Tensor &conv_weight(int l) const { return params_[static_cast<std::size_t>(2 + 2 * l)]; }
    Tensor &conv_bias(int l) { return params_[static_cast<std::size_t>(3 + 2 * l)]; }
    const Tensor &conv_bias(int l) const { return params_[static_cast<std::size_t>(3 + 2 * l)]; }

    // shift(t)[p] = source position of kernel tap t for output position p
    const std::vector<std::vector<Eigen::Index>> &shift_tables() const noexcept { return shifts_; }

    bool all_finite() const
    {
        for (const auto &p : params_)
            if (!p.data.allFinite())
                return false;
        return true;
    }

  private:
    void build_shift_tables()
    {
        const int kk = arch_.kernel;
        const int half = kk / 2;
        const Eigen::Index nr = arch_.n_rx;
        const Eigen::Index nt = arch_.n_tx;
        shifts_.assign(static_cast<std::size_t>(kk * kk), std::vector<Eigen::Index>(static_cast<std::size_t>(nr * nt)));
        for (int dr = -half; dr <= half; ++dr)
            for (int dc = -half; dc <= half; ++dc)
            {
                auto &table = shifts_[static_cast<std::size_t>((dr + half) * kk + (dc + half))];
                for (Eigen::Index c = 0; c < nt; ++c)
                    for (Eigen::Index r = 0; r < nr; ++r)
                    {
                        const Eigen::Index sr = ((r + dr) % nr + nr) % nr;
                        const Eigen::Index sc = ((c + dc) % nt + nt) % nt;
                        table[static_cast<std::size_t>(r + nr * c)] = sr + nr * sc;
                    }
            }
    }

    Architecture arch_;
    int steps_ = 0;
    std::vector<Tensor> params_;
    std::vector<std::vector<Eigen::Index>> shifts_;
};

using Gradients = std::vector<RVector>;

inline Gradients zero_gradients(const ScoreModel &model)
{
    Gradients g;
    for (const auto &p : model.params())
        g.push_back(RVector::Zero(p.data.size()));
    return g;
}

namespace detail {

inline double activate(Activation a, double x)
{
    if (a == Activation::SiLU)
        return x / (1.0 + std::exp(-x));
    return std::tanh(x);
}

inline double activate_grad(Activation a, double x)
{
    if (a == Activation::SiLU)
    {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 + x * (1.0 - s));
    }
    const double t = std::tanh(x);
    return 1.0 - t * t;
}

inline RMatrix im2col(const RMatrix &a, const std::vector<std::vector<Eigen::Index>> &shifts, Eigen::Index batch,
                      Eigen::Index positions)
{
    const auto taps = static_cast<Eigen::Index>(shifts.size());
    RMatrix col(a.rows(), a.cols() * taps);
    for (Eigen::Index c = 0; c < a.cols(); ++c)
        for (Eigen::Index t = 0; t < taps; ++t)
        {
            const auto &table = shifts[static_cast<std::size_t>(t)];
            double *dst = col.col(c * taps + t).data();
            const double *src = a.col(c).data();
            for (Eigen::Index b = 0; b < batch; ++b)
            {
                const Eigen::Index base = b * positions;
                for (Eigen::Index p = 0; p < positions; ++p)
                    dst[base + p] = src[base + table[static_cast<std::size_t>(p)]];
            }
        }
    return col;
}

inline RMatrix col2im(const RMatrix &dcol, const std::vector<std::vector<Eigen::Index>> &shifts, Eigen::Index batch,
                      Eigen::Index positions, Eigen::Index channels)
{
    const auto taps = static_cast<Eigen::Index>(shifts.size());
    RMatrix da = RMatrix::Zero(dcol.rows(), channels);
    for (Eigen::Index c = 0; c < channels; ++c)
        for (Eigen::Index t = 0; t < taps; ++t)
        {
            const auto &table = shifts[static_cast<std::size_t>(t)];
            const double *src = dcol.col(c * taps + t).data();
            double *dst = da.col(c).data();
            for (Eigen::Index b = 0; b < batch; ++b)
            {
                const Eigen::Index base = b * positions;
                for (Eigen::Index p = 0; p < positions; ++p)
                    dst[base + table[static_cast<std::size_t>(p)]] += src[base + p];
            }
        }
    return da;
}

} // namespace detail

// Per-layer tensors kept for the backward pass.
struct ForwardCache
{
    Eigen::Index batch = 0;
    RMatrix embeddings;               // B x embed_dim
    std::vector<RMatrix> cols;        // im2col of each layer's input
    std::vector<RMatrix> preacts;     // pre-activation of each layer
    std::vector<double> input_scales; // per sample
};

// Noise prediction for a batch. `x` is (B * P) x 2 holding the noisy
// beamspace channels h_k (unscaled); steps/sigmas are per sample.
inline RMatrix predict_noise(const ScoreModel &model, const RMatrix &x, std::span<const int> steps,
                             std::span<const double> sigmas, ForwardCache *cache = nullptr)
{
    const auto &arch = model.arch();
    const Eigen::Index positions = arch.positions();
    const auto batch = static_cast<Eigen::Index>(steps.size());
    require(x.cols() == 2 && x.rows() == batch * positions, ErrorKind::Dimension,
            "predict_noise: input must be (B*n_rx*n_tx) x 2");
    require(sigmas.size() == steps.size(), ErrorKind::Dimension, "predict_noise: steps/sigmas length mismatch");

    const int e_ch = arch.embed_channels;
    const int e_dim = arch.embed_dim;
    RMatrix emb(batch, e_dim);
    for (Eigen::Index b = 0; b < batch; ++b)
        emb.row(b) = embed_step(steps[static_cast<std::size_t>(b)], model.steps(), e_dim).transpose();
    Eigen::Map<const RMatrix> we_t(model.params()[0].data.data(), e_dim, e_ch);
    RMatrix u = emb * we_t;
    u.rowwise() += model.params()[1].data.transpose();

    RMatrix a(batch * positions, 2 + e_ch);
    std::vector<double> scales(static_cast<std::size_t>(batch), 1.0);
    for (Eigen::Index b = 0; b < batch; ++b)
    {
        const double sigma = sigmas[static_cast<std::size_t>(b)];
        require(sigma > 0.0, ErrorKind::Parameter, "predict_noise: sigma_k must be > 0");
        const double s = arch.input_scaling ? 1.0 / std::sqrt(1.0 + sigma * sigma) : 1.0;
        scales[static_cast<std::size_t>(b)] = s;
        a.block(b * positions, 0, positions, 2) = s * x.block(b * positions, 0, positions, 2);
        for (int c = 0; c < e_ch; ++c)
            a.block(b * positions, 2 + c, positions, 1).setConstant(u(b, c));
    }

    if (cache)
    {
        cache->batch = batch;
        cache->embeddings = emb;
        cache->cols.clear();
        cache->preacts.clear();
        cache->input_scales = scales;
    }

    const auto &shifts = model.shift_tables();
    const int kk = arch.kernel * arch.kernel;
    for (int l = 0; l < arch.num_conv(); ++l)
    {
        const int ci = arch.in_channels(l);
        const int co = arch.out_channels(l);
        RMatrix col = detail::im2col(a, shifts, batch, positions);
        Eigen::Map<const RMatrix> w(model.conv_weight(l).data.data(), ci * kk, co);
        RMatrix z = col * w;
        z.rowwise() += model.conv_bias(l).data.transpose();
        const bool last = l == arch.num_conv() - 1;
        if (last)
            a = z;
        else
            a = z.unaryExpr([act = arch.activation](double v) { return detail::activate(act, v); });
        if (cache)
        {
            cache->cols.push_back(std::move(col));
            cache->preacts.push_back(std::move(z));
        }
    }
    return a;
}

// Backpropagate dL/d(eps_hat) through a cached forward pass.
inline Gradients backward(const ScoreModel &model, const ForwardCache &cache, const RMatrix &d_out)
{
    const auto &arch = model.arch();
    const Eigen::Index positions = arch.positions();
    const Eigen::Index batch = cache.batch;
    const int kk = arch.kernel * arch.kernel;
    Gradients grads = zero_gradients(model);

    RMatrix dz = d_out;
    for (int l = arch.num_conv() - 1; l >= 0; --l)
    {
        const int ci = arch.in_channels(l);
        const int co = arch.out_channels(l);
        const RMatrix &col = cache.cols[static_cast<std::size_t>(l)];
        Eigen::Map<RMatrix> dw(grads[static_cast<std::size_t>(2 + 2 * l)].data(), ci * kk, co);
        dw.noalias() = col.transpose() * dz;
        grads[static_cast<std::size_t>(3 + 2 * l)] = dz.colwise().sum().transpose();

        Eigen::Map<const RMatrix> w(model.conv_weight(l).data.data(), ci * kk, co);
        RMatrix dcol = dz * w.transpose();
        RMatrix da = detail::col2im(dcol, model.shift_tables(), batch, positions, ci);
        if (l > 0)
        {
            const RMatrix &zprev = cache.preacts[static_cast<std::size_t>(l - 1)];
            dz = da.cwiseProduct(zprev.unaryExpr([act = arch.activation](double v) { return detail::activate_grad(act, v); }));
        }
        else
        {
            const int e_ch = arch.embed_channels;
            RMatrix du(batch, e_ch);
            for (Eigen::Index b = 0; b < batch; ++b)
                for (int c = 0; c < e_ch; ++c)
                    du(b, c) = da.block(b * positions, 2 + c, positions, 1).sum();
            Eigen::Map<RMatrix> dwe(grads[0].data(), arch.embed_dim, e_ch);
            dwe.noalias() = cache.embeddings.transpose() * du;
            grads[1] = du.colwise().sum().transpose();
        }
    }
    return grads;
}

// ---------- complex <-> real layout ----------

// N x B complex (column per sample) -> (B * N) x 2 real.
inline RMatrix to_real_layout(const CMatrix &h)
{
    const Eigen::Index n = h.rows();
    RMatrix x(h.size(), 2);
    for (Eigen::Index b = 0; b < h.cols(); ++b)
        for (Eigen::Index p = 0; p < n; ++p)
        {
            x(b * n + p, 0) = h(p, b).real();
            x(b * n + p, 1) = h(p, b).imag();
        }
    return x;
}

inline CMatrix from_real_layout(const RMatrix &x, Eigen::Index n)
{
    const Eigen::Index batch = x.rows() / n;
    CMatrix h(n, batch);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index p = 0; p < n; ++p)
            h(p, b) = Complex(x(b * n + p, 0), x(b * n + p, 1));
    return h;
}

// eps_theta for a batch of beamspace vectors that share the step k. Large
// batches are processed in chunks to bound im2col memory.
inline CMatrix predict_noise(const ScoreModel &model, const CMatrix &h_k, int k, double sigma_k)
{
    require(h_k.rows() == model.arch().positions(), ErrorKind::Dimension,
            "forward: input length does not match the model's n_rx*n_tx");
    constexpr Eigen::Index chunk = 256;
    CMatrix out(h_k.rows(), h_k.cols());
    for (Eigen::Index start = 0; start < h_k.cols(); start += chunk)
    {
        const Eigen::Index len = std::min(chunk, h_k.cols() - start);
        const std::vector<int> steps(static_cast<std::size_t>(len), k);
        const std::vector<double> sigmas(static_cast<std::size_t>(len), sigma_k);
        const RMatrix eps = predict_noise(model, to_real_layout(h_k.middleCols(start, len)), steps, sigmas);
        out.middleCols(start, len) = from_real_layout(eps, h_k.rows());
    }
    return out;
}

// s_theta(h_k, k) = -eps_theta(h_k, k) / sigma_k, column-wise.
inline CMatrix score(const ScoreModel &model, const CMatrix &h_k, int k, double sigma_k)
{
    require(sigma_k > 0.0, ErrorKind::Parameter, "score: sigma_k must be > 0");
    return -predict_noise(model, h_k, k, sigma_k) / sigma_k;
}

inline CVector forward(const ScoreModel &model, const CVector &h_k, int k, double sigma_k)
{
    return score(model, CMatrix(h_k), k, sigma_k).col(0);
}

// ---------- loss ----------

// One DSM minibatch. `inputs` are noisy beamspace channels h_k = h_0 + sigma_k eps,
// `targets` the noise realizations eps (both (B * P) x 2).
struct TrainingBatch
{
    RMatrix inputs;
    RMatrix targets;
    std::vector<int> steps;
    std::vector<double> sigmas;
};

struct LossAndGrad
{
    double loss = 0.0;
    Gradients grads;
};

// Mean squared error between eps_theta and eps over batch and components.
// Equivalent to the score-matching MSE weighted by sigma_k^2 per sample.
inline double batch_loss(const ScoreModel &model, const TrainingBatch &batch)
{
    const RMatrix pred = predict_noise(model, batch.inputs, batch.steps, batch.sigmas);
    return (pred - batch.targets).squaredNorm() / static_cast<double>(pred.size());
}

inline LossAndGrad loss_and_grad(const ScoreModel &model, const TrainingBatch &batch)
{
    require(!batch.steps.empty(), ErrorKind::Parameter, "loss_and_grad: empty batch");
    require(batch.targets.rows() == batch.inputs.rows() && batch.targets.cols() == 2, ErrorKind::Dimension,
            "loss_and_grad: target shape mismatch");
    ForwardCache cache;
    const RMatrix pred = predict_noise(model, batch.inputs, batch.steps, batch.sigmas, &cache);
    const RMatrix diff = pred - batch.targets;
    const auto n = static_cast<double>(diff.size());
    LossAndGrad out;
    out.loss = diff.squaredNorm() / n;
    out.grads = backward(model, cache, (2.0 / n) * diff);
    return out;
}

// ---------- AdamW ----------

struct OptimizerState
{
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<RVector> m;
    std::vector<RVector> v;

    static OptimizerState for_model(const ScoreModel &model, double lr, double weight_decay)
    {
        OptimizerState s;
        s.lr = lr;
        s.weight_decay = weight_decay;
        for (const auto &p : model.params())
        {
            s.m.push_back(RVector::Zero(p.data.size()));
            s.v.push_back(RVector::Zero(p.data.size()));
        }
        return s;
    }
};

// Decoupled weight decay: w <- w (1 - lr wd), then the bias-corrected Adam step.
inline void optimizer_step(std::vector<Tensor> &params, const Gradients &grads, OptimizerState &state)
{
    require(grads.size() == params.size() && state.m.size() == params.size(), ErrorKind::Dimension,
            "optimizer_step: parameter/gradient/state count mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i)
    {
        auto &w = params[i].data;
        const auto &g = grads[i];
        require(g.size() == w.size() && state.m[i].size() == w.size(), ErrorKind::Dimension,
                "optimizer_step: shape mismatch for '" + params[i].name + "'");
        w *= 1.0 - state.lr * state.weight_decay;
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.cwiseAbs2();
        w.array() -= state.lr * (state.m[i].array() / bc1) / ((state.v[i].array() / bc2).sqrt() + state.eps);
    }
}

inline void optimizer_step(ScoreModel &model, const Gradients &grads, OptimizerState &state)
{
    optimizer_step(model.params(), grads, state);
}

// ---------- checkpoint ----------

inline constexpr std::string_view model_magic = "SBMNN1";
inline constexpr std::uint16_t model_version = 1;

inline void save_model(const ScoreModel &model, const NoiseSchedule &sched, const std::string &path)
{
    require(model.steps() == sched.steps(), ErrorKind::Parameter, "save_model: schedule K differs from model K");
    const auto &a = model.arch();
    io::Writer w(path);
    w.magic(model_magic);
    w.value(model_version);
    // architecture
    w.value(static_cast<std::uint32_t>(a.n_rx));
    w.value(static_cast<std::uint32_t>(a.n_tx));
    w.value(static_cast<std::uint32_t>(a.embed_dim));
    w.value(static_cast<std::uint32_t>(a.embed_channels));
    w.value(static_cast<std::uint32_t>(a.kernel));
    w.value(static_cast<std::uint8_t>(a.activation));
    w.value(static_cast<std::uint8_t>(a.input_scaling ? 1 : 0));
    w.value(static_cast<std::uint32_t>(a.hidden.size()));
    for (int h : a.hidden)
        w.value(static_cast<std::uint32_t>(h));
    // schedule
    w.value(static_cast<std::uint32_t>(sched.steps()));
    w.value(sched.gamma());
    w.value(sched.snr_max_db());
    w.value(sched.snr_min_db());
    w.doubles(sched.sigmas().data(), sched.sigmas().size());
    // parameters
    w.value(static_cast<std::uint32_t>(model.params().size()));
    for (const auto &p : model.params())
    {
        w.string(p.name);
        w.value(static_cast<std::uint32_t>(p.shape.size()));
        for (int d : p.shape)
            w.value(static_cast<std::uint32_t>(d));
        w.doubles(p.data.data(), static_cast<std::size_t>(p.data.size()));
    }
    w.close();
}

struct Checkpoint
{
    ScoreModel model;
    NoiseSchedule schedule;
};

inline Checkpoint load_model(const std::string &path)
{
    io::Reader r(path);
    r.expect_magic(model_magic);
    r.expect_version(model_version);
    Architecture a;
    a.n_rx = r.value<std::uint32_t>();
    a.n_tx = r.value<std::uint32_t>();
    a.embed_dim = static_cast<int>(r.value<std::uint32_t>());
    a.embed_channels = static_cast<int>(r.value<std::uint32_t>());
    a.kernel = static_cast<int>(r.value<std::uint32_t>());
    const auto act = r.value<std::uint8_t>();
    require(act <= 1, ErrorKind::Format, "'" + path + "' has unknown activation id");
    a.activation = static_cast<Activation>(act);
    a.input_scaling = r.value<std::uint8_t>() != 0;
    const auto n_hidden = r.value<std::uint32_t>();
    require(n_hidden < 64, ErrorKind::Format, "'" + path + "' has an implausible layer count");
    a.hidden.resize(n_hidden);
    for (auto &h : a.hidden)
        h = static_cast<int>(r.value<std::uint32_t>());
    try
    {
        a.validate();
    }
    catch (const Error &e)
    {
        fail(ErrorKind::Format, "'" + path + "' has an invalid architecture: " + e.what());
    }

    const auto k = r.value<std::uint32_t>();
    require(k >= 2 && k < 100000, ErrorKind::Format, "'" + path + "' has an implausible step count");
    const double gamma = r.value<double>();
    const double snr_max = r.value<double>();
    const double snr_min = r.value<double>();
    std::vector<double> sigmas(k);
    r.doubles(sigmas.data(), sigmas.size());
    Checkpoint ck{ScoreModel(a, static_cast<int>(k)), NoiseSchedule::restore(snr_max, snr_min, gamma, std::move(sigmas))};

    const auto n_params = r.value<std::uint32_t>();
    require(n_params == ck.model.params().size(), ErrorKind::Format, "'" + path + "' has a wrong parameter count");
    for (auto &p : ck.model.params())
    {
        const auto name = r.string();
        require(name == p.name, ErrorKind::Format, "'" + path + "': expected parameter '" + p.name + "', got '" + name + "'");
        const auto rank = r.value<std::uint32_t>();
        require(rank == p.shape.size(), ErrorKind::Format, "'" + path + "': rank mismatch for '" + name + "'");
        for (int d : p.shape)
            require(r.value<std::uint32_t>() == static_cast<std::uint32_t>(d), ErrorKind::Format,
                    "'" + path + "': shape mismatch for '" + name + "'");
        r.doubles(p.data.data(), static_cast<std::size_t>(p.data.size()));
    }
    r.expect_end();
    require(ck.model.all_finite(), ErrorKind::Format, "'" + path + "' contains non-finite parameters");
    return ck;
}

} // namespace sbmce
