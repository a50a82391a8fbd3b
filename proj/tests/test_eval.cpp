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

#include "test_util.hpp"

#include <fstream>
#include <sstream>

using namespace sbmce;
using sbmce::testing::TempDir;

namespace {

ChannelDataset gaussian_test_set(Eigen::Index nr, Eigen::Index nt, Eigen::Index m, Rng &rng)
{
    ChannelDataset ds;
    ds.n_rx = nr;
    ds.n_tx = nt;
    ds.samples.resize(nr * nt, m);
    for (Eigen::Index j = 0; j < m; ++j)
        ds.samples.col(j) = draw_circular_gaussian(nr * nt, 1.0, rng);
    ds.split = Split::Test;
    return ds;
}

Checkpoint tiny_checkpoint(int steps, Rng &rng)
{
    Architecture a;
    a.n_rx = 4;
    a.n_tx = 2;
    a.embed_dim = 4;
    a.embed_channels = 2;
    a.hidden = {3};
    Checkpoint ck{ScoreModel(a, steps), build_schedule(40.0, -22.0, steps, 1.0)};
    ck.model.init_random(rng);
    return ck;
}

EstimatorSpec make_spec(const std::string &id, EstimatorKind kind, int delta = 1)
{
    EstimatorSpec s;
    s.id = id;
    s.kind = kind;
    s.delta = delta;
    return s;
}

std::string slurp(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Nmse, KnownValues)
{
    const CMatrix truth = CMatrix::Ones(2, 2);
    EXPECT_EQ(nmse(truth, truth), 0.0);
    EXPECT_DOUBLE_EQ(nmse(truth, CMatrix::Zero(2, 2)), 1.0);
    CMatrix est = truth;
    est(0, 0) = Complex(1.0, 2.0);
    EXPECT_DOUBLE_EQ(nmse(truth, est), 1.0);
    EXPECT_THROW(nmse(truth, CMatrix::Zero(2, 3)), Error);
    EXPECT_THROW(nmse(CMatrix(2, 0), CMatrix(2, 0)), Error);
}

TEST(SnrRange, InclusiveStopAndValidation)
{
    const auto g = snr_range(-15.0, 20.0, 2.5);
    ASSERT_EQ(g.size(), 15u);
    EXPECT_EQ(g.front(), -15.0);
    EXPECT_EQ(g.back(), 20.0);
    EXPECT_THROW(snr_range(0.0, 1.0, 0.0), Error);
    EXPECT_THROW(snr_range(1.0, 0.0, 1.0), Error);
}

TEST(Sweep, LeastSquaresOnlyGivesOneRowPerSnr)
{
    Rng rng(1);
    const ChannelDataset test = gaussian_test_set(4, 2, 300, rng);
    SweepConfig cfg;
    cfg.snr_grid_db = {10.0};
    cfg.estimators = {make_spec("LS", EstimatorKind::Ls)};
    SweepResources res;
    res.test = &test;
    const EvalReport r = run_sweep(cfg, res);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].estimator, "LS");
    EXPECT_EQ(r[0].snr_db, 10.0);
    EXPECT_NEAR(r[0].nmse, 0.1, 0.01);
    EXPECT_EQ(r[0].mean_nfe, 0.0);
    EXPECT_EQ(r[0].wall_time_s, 0.0);
}

TEST(Sweep, MissingResourcesAreConfigErrors)
{
    Rng rng(2);
    const ChannelDataset test = gaussian_test_set(4, 2, 10, rng);
    SweepResources res;
    res.test = &test;
    for (EstimatorKind kind : {EstimatorKind::ScovLmmse, EstimatorKind::Gmm, EstimatorKind::Sbm})
    {
        SweepConfig cfg;
        cfg.estimators = {make_spec("X", kind)};
        try
        {
            run_sweep(cfg, res);
            FAIL();
        }
        catch (const Error &e)
        {
            EXPECT_EQ(e.kind(), ErrorKind::Config);
        }
    }
    SweepConfig empty_grid;
    empty_grid.snr_grid_db.clear();
    EXPECT_THROW(run_sweep(empty_grid, res), Error);
}

TEST(Sweep, ScoreRowsCarryStepAccountingAndAreReproducible)
{
    Rng rng(3);
    const ChannelDataset test = gaussian_test_set(4, 2, 200, rng);
    const Checkpoint ck = tiny_checkpoint(20, rng);
    SweepConfig cfg;
    cfg.snr_grid_db = {0.0, 10.0};
    cfg.estimators = {make_spec("SBM", EstimatorKind::Sbm, 1), make_spec("SBM-d4", EstimatorKind::Sbm, 4),
                      make_spec("SBM-single", EstimatorKind::Sbm, 0)};
    SweepResources res;
    res.test = &test;
    res.default_model = &ck;
    const EvalReport r = run_sweep(cfg, res);
    ASSERT_EQ(r.size(), 6u);
    for (const auto &row : r)
    {
        const int k_hat = initial_step(1.0 / db_to_linear(row.snr_db), ck.schedule);
        EXPECT_EQ(row.mean_k_hat, k_hat);
        const int delta = row.estimator == "SBM" ? 1 : row.estimator == "SBM-d4" ? 4 : 20;
        EXPECT_EQ(row.mean_nfe, (k_hat + delta - 1) / delta) << row.estimator;
        EXPECT_LE(row.mean_nfe, k_hat);
    }
    const EvalReport again = run_sweep(cfg, res);
    for (std::size_t i = 0; i < r.size(); ++i)
        EXPECT_EQ(r[i].nmse, again[i].nmse);

    cfg.workers = 3;
    const EvalReport threaded = run_sweep(cfg, res);
    for (std::size_t i = 0; i < r.size(); ++i)
        EXPECT_EQ(r[i].nmse, threaded[i].nmse);
}

TEST(Sweep, GammaMismatchIsAConfigError)
{
    Rng rng(4);
    const ChannelDataset test = gaussian_test_set(4, 2, 10, rng);
    const Checkpoint ck = tiny_checkpoint(10, rng);
    SweepConfig cfg;
    EstimatorSpec spec = make_spec("SBM", EstimatorKind::Sbm);
    spec.gamma = 0.5;
    cfg.estimators = {spec};
    SweepResources res;
    res.test = &test;
    res.default_model = &ck;
    try
    {
        run_sweep(cfg, res);
        FAIL();
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
        EXPECT_NE(std::string(e.what()).find("gamma"), std::string::npos);
    }
}

TEST(Sweep, EstimatorsShareTheSameNoise)
{
    Rng rng(5);
    const CMatrix truth = sbmce::testing::random_matrix(8, 5, rng);
    const CMatrix a = sweep_observations(truth, 4, Pilot::dft(2), 0.1, 7, 2);
    const CMatrix b = sweep_observations(truth, 4, Pilot::dft(2), 0.1, 7, 2);
    const CMatrix c = sweep_observations(truth, 4, Pilot::dft(2), 0.1, 7, 3);
    EXPECT_TRUE(a == b);
    EXPECT_FALSE(a == c);
    // a prefix of the test set sees the same noise as the full set
    EXPECT_TRUE(sweep_observations(truth.leftCols(2), 4, Pilot::dft(2), 0.1, 7, 2) == a.leftCols(2));
}

TEST(Csv, HeaderAndEmptyReport)
{
    TempDir dir;
    emit_csv({}, dir.file("r.csv"));
    EXPECT_EQ(slurp(dir.file("r.csv")), std::string(report_header) + "\n");
    EXPECT_TRUE(parse_csv(dir.file("r.csv")).empty());
}

TEST(Csv, RoundTripSortsByEstimatorThenSnr)
{
    TempDir dir;
    const EvalReport rows = {{10.0, "SBM", 0.01, 49, 49, 49, 0.0},
                             {-5.0, "SBM", 0.3, 73, 73, 73, 0.0},
                             {10.0, "LS", 0.1, 0, 0, 0, 0.0}};
    emit_csv(rows, dir.file("r.csv"));
    const EvalReport back = parse_csv(dir.file("r.csv"));
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[0].estimator, "LS");
    EXPECT_EQ(back[1].snr_db, -5.0);
    EXPECT_EQ(back[2].snr_db, 10.0);
    EXPECT_EQ(back[2].nmse, 0.01);
    EXPECT_EQ(back[1].mean_k_hat, 73.0);

    std::istringstream lines(slurp(dir.file("r.csv")));
    std::string line;
    while (std::getline(lines, line))
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6) << line;
}

TEST(Csv, RejectsMalformedFiles)
{
    TempDir dir;
    std::ofstream(dir.file("bad.csv")) << "snr,estimator\n";
    EXPECT_THROW(parse_csv(dir.file("bad.csv")), Error);
    std::ofstream(dir.file("short.csv")) << report_header << "\n1,LS,0.1\n";
    EXPECT_THROW(parse_csv(dir.file("short.csv")), Error);
    EXPECT_THROW(parse_csv(dir.file("missing.csv")), Error);
}

TEST(Trace, OneEntryPerStepFromLeastSquaresToTheFullEstimate)
{
    Rng rng(6);
    const Checkpoint ck = tiny_checkpoint(20, rng);
    const CVector h = sbmce::testing::random_vector(8, rng);
    const PilotObservation obs = observe(h, 4, Pilot::dft(2), 0.2, rng);
    const PerStepTrace t = per_step_trace(obs, h, ck.model, ck.schedule);
    const int k_hat = initial_step(0.2, ck.schedule);
    ASSERT_EQ(static_cast<int>(t.steps.size()), k_hat);
    EXPECT_EQ(t.initial_nmse, nmse(h, ls_estimate(obs).h));
    for (int i = 0; i < k_hat; ++i)
        EXPECT_EQ(t.steps[static_cast<std::size_t>(i)].k, k_hat - i);
    EXPECT_NEAR(t.steps.back().nmse, nmse(h, sbm_estimate(obs, ck.model, ck.schedule, 1).h), 1e-12);
}

TEST(Trace, InitialStepsOverTheGrid)
{
    const NoiseSchedule s = build_schedule(40.0, -22.0, 100, 1.0);
    const std::vector<int> expected = {89, 73, 65, 57, 49, 41, 33};
    EXPECT_EQ(initial_steps_over_grid(s, {-15.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0}), expected);
}
