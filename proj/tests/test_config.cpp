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

using namespace sbmce;
using nlohmann::json;

namespace {

ErrorKind kind_of(const json &j)
{
    try
    {
        parse_config(j);
    }
    catch (const Error &e)
    {
        return e.kind();
    }
    ADD_FAILURE() << "config was accepted: " << j.dump();
    return ErrorKind::Io;
}

} // namespace

TEST(Config, EmptyDocumentGivesTheDefaults)
{
    const RunConfig c = parse_config(json::object());
    EXPECT_EQ(c.scenario.n_rx, 16);
    EXPECT_EQ(c.scenario.n_tx, 4);
    EXPECT_EQ(c.model.n_rx, 16);
    EXPECT_EQ(c.schedule.steps, 100);
    EXPECT_EQ(c.schedule.gamma, 1.0);
    EXPECT_EQ(c.schedule.snr_max_db, 40.0);
    EXPECT_EQ(c.schedule.snr_min_db, -22.0);
    EXPECT_EQ(c.train.lr, 2e-3);
    EXPECT_EQ(c.train.weight_decay, 1e-4);
    EXPECT_EQ(c.data.m_train, 20000);
    EXPECT_EQ(c.sweep.snr_grid_db.size(), 15u);
    ASSERT_EQ(c.sweep.estimators.size(), 10u);
    EXPECT_EQ(c.sweep.estimators.back().id, "SBM-single-step");
    EXPECT_EQ(c.sweep.estimators.back().delta, 0);
    EXPECT_EQ(c.pilot, "dft");
    const NoiseSchedule s = c.schedule.build();
    EXPECT_NEAR(s.sigma_max(), 12.589254117941675, 1e-12);
}

TEST(Config, UnknownKeysAreRejected)
{
    EXPECT_EQ(kind_of({{"bogus", 1}}), ErrorKind::Config);
    EXPECT_EQ(kind_of({{"schedule", {{"steps", 10}}}}), ErrorKind::Config);
    EXPECT_EQ(kind_of({{"sweep", {{"estimators", {{{"id", "A"}, {"kind", "ls"}, {"colour", 1}}}}}}}),
              ErrorKind::Config);
}

TEST(Config, InvalidValuesAreConfigErrors)
{
    EXPECT_EQ(kind_of({{"schedule", {{"K", 1}}}}), ErrorKind::Config);
    EXPECT_EQ(kind_of({{"schedule", {{"gamma", 0.0}}}}), ErrorKind::Config);
    EXPECT_EQ(kind_of({{"schedule", {{"gamma", -1.0}}}}), ErrorKind::Config);
    EXPECT_EQ(kind_of({{"sweep", {{"snr_grid_db", json::array()}}}}), ErrorKind::Config);
    EXPECT_EQ(kind_of({{"schedule", {{"K", "ten"}}}}), ErrorKind::Config);
    EXPECT_EQ(kind_of({{"pilot", "random"}}), ErrorKind::Config);
    EXPECT_EQ(kind_of({{"sweep", {{"estimators", {{{"id", "A"}, {"kind", "kalman"}}}}}}}), ErrorKind::Config);
    EXPECT_EQ(kind_of({{"sweep", {{"estimators", {{{"id", "A"}, {"kind", "sbm"}, {"delta", 0}}}}}}}),
              ErrorKind::Config);
    EXPECT_EQ(kind_of({{"sweep", {{"estimators", {{{"id", "A"}, {"kind", "sbm"}, {"delta", "min"}}}}}}}),
              ErrorKind::Config);
}

TEST(Config, EstimatorEntries)
{
    const json j = {{"sweep",
                     {{"estimators",
                       {{{"id", "S"}, {"kind", "sbm"}, {"delta", "max"}, {"gamma", 0.6}, {"model", "m.sbmnn"}},
                        {{"id", "K"}, {"kind", "gmm-kron"}, {"rx_components", 3}, {"tx_components", 2}},
                        {{"id", "G"}, {"kind", "gmm"}, {"components", 5}}}}}}};
    const RunConfig c = parse_config(j);
    ASSERT_EQ(c.sweep.estimators.size(), 3u);
    const auto &s = c.sweep.estimators[0];
    EXPECT_EQ(s.kind, EstimatorKind::Sbm);
    EXPECT_EQ(s.delta, 0);
    ASSERT_TRUE(s.gamma.has_value());
    EXPECT_EQ(*s.gamma, 0.6);
    EXPECT_EQ(s.model_path, "m.sbmnn");
    EXPECT_EQ(c.sweep.estimators[1].gmm.structure, GmmStructure::Kronecker);
    EXPECT_EQ(c.sweep.estimators[1].gmm.n_rx_components, 3);
    EXPECT_EQ(c.sweep.estimators[1].gmm.n_tx_components, 2);
    EXPECT_EQ(c.sweep.estimators[2].gmm.structure, GmmStructure::Full);
    EXPECT_EQ(c.sweep.estimators[2].gmm.n_components, 5);
}

TEST(Config, GridRangeObject)
{
    const RunConfig c = parse_config({{"sweep", {{"snr_grid_db", {{"start", 0}, {"stop", 10}, {"step", 5}}}}}});
    EXPECT_EQ(c.sweep.snr_grid_db, (std::vector<double>{0.0, 5.0, 10.0}));
}

TEST(Config, ScenarioDimsFlowIntoTheModel)
{
    const RunConfig c = parse_config({{"scenario", {{"n_rx", 8}, {"n_tx", 2}}}, {"workers", 2}});
    EXPECT_EQ(c.model.n_rx, 8);
    EXPECT_EQ(c.model.n_tx, 2);
    EXPECT_EQ(c.sweep.workers, 2);
}

TEST(Config, ShippedFilesParse)
{
    for (const char *name : {"default.json", "smoke.json", "acceptance.json"})
        EXPECT_NO_THROW(load_config(std::string(SBMCE_SOURCE_DIR) + "/configs/" + name)) << name;
}

TEST(Config, FileErrors)
{
    sbmce::testing::TempDir dir;
    try
    {
        load_config(dir.file("absent.json"));
        FAIL();
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
        EXPECT_EQ(exit_code(e.kind()), 2);
    }
    std::ofstream(dir.file("broken.json")) << "{ \"schedule\": ";
    EXPECT_THROW(load_config(dir.file("broken.json")), Error);
    std::ofstream(dir.file("commented.json")) << "{ // a comment\n \"workers\": 1 }";
    EXPECT_NO_THROW(load_config(dir.file("commented.json")));
}
