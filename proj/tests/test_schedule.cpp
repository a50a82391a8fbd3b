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

using namespace sbmce;

namespace {
const NoiseSchedule &default_schedule()
{
    static const NoiseSchedule s = build_schedule(40.0, -22.0, 100, 1.0);
    return s;
}
} // namespace

TEST(BuildSchedule, DefaultEndpoints)
{
    const NoiseSchedule &s = default_schedule();
    EXPECT_EQ(s.sigma_min(), 0.01);
    EXPECT_EQ(s.sigma(1), 0.01);
    EXPECT_NEAR(s.sigma_max(), 12.589254117941675, 1e-12);
    EXPECT_NEAR(s.sigma_max(), 12.6, 0.05);
    EXPECT_EQ(s.sigma(100), s.sigma_max());
    EXPECT_EQ(s.sigma(0), 0.0);
}

TEST(BuildSchedule, TwoStepsAreExactlyTheEndpoints)
{
    const NoiseSchedule s = build_schedule(40.0, -22.0, 2, 1.0);
    ASSERT_EQ(s.sigmas().size(), 2u);
    EXPECT_EQ(s.sigmas()[0], s.sigma_min());
    EXPECT_EQ(s.sigmas()[1], s.sigma_max());
}

TEST(BuildSchedule, MidpointMatchesIndependentEvaluation)
{
    // oracle values evaluated outside this code base
    EXPECT_NEAR(build_schedule(40.0, -22.0, 100, 0.2).sigma(50), 4.934380672313696, 1e-12);
    EXPECT_NEAR(build_schedule(40.0, -22.0, 100, 1.0).sigma(50), 0.34224998229813497, 1e-13);
}

TEST(BuildSchedule, StrictlyIncreasingForManyGammas)
{
    for (double g : {0.1, 0.2, 0.6, 1.0, 1.6, 3.0})
    {
        const NoiseSchedule s = build_schedule(40.0, -22.0, 100, g);
        for (int k = 1; k < 100; ++k)
            EXPECT_LT(s.sigma(k), s.sigma(k + 1)) << "gamma=" << g << " k=" << k;
    }
}

TEST(BuildSchedule, InvalidParametersAreRejected)
{
    EXPECT_THROW(build_schedule(40.0, -22.0, 1, 1.0), Error);
    EXPECT_THROW(build_schedule(40.0, -22.0, 100, 0.0), Error);
    EXPECT_THROW(build_schedule(40.0, -22.0, 100, -1.0), Error);
    EXPECT_THROW(build_schedule(-22.0, 40.0, 100, 1.0), Error);
    EXPECT_THROW(default_schedule().sigma(101), Error);
}

TEST(SnrConversion, SigmaFromSnr)
{
    EXPECT_NEAR(sigma_from_snr_db(40.0), 0.01, 1e-15);
    EXPECT_NEAR(sigma_from_snr_db(0.0), 1.0, 1e-15);
    EXPECT_NEAR(db_to_linear(10.0), 10.0, 1e-12);
}

TEST(InitialStep, ExactGridPointSelectsItsIndex)
{
    const NoiseSchedule &s = default_schedule();
    for (int k : {1, 7, 50, 100})
        EXPECT_EQ(initial_step(s.sigma(k) * s.sigma(k), s), k);
}

TEST(InitialStep, ClampsOutsideTheRange)
{
    const NoiseSchedule &s = default_schedule();
    EXPECT_EQ(initial_step(10.0 * s.sigma_max() * s.sigma_max(), s), 100);
    EXPECT_EQ(initial_step(0.0, s), 1);
    EXPECT_EQ(initial_step(1e-9, s), 1);
    EXPECT_FALSE(s.covers(0.0));
    EXPECT_TRUE(s.covers(1.0));
}

TEST(InitialStep, ZeroDbMatchesLinearScan)
{
    // argmin over the explicitly tabulated sigma_k^2, evaluated outside this code base
    EXPECT_EQ(initial_step(1.0, default_schedule()), 65);
}

TEST(InitialStep, GridValuesMatchLinearScan)
{
    const NoiseSchedule &s = default_schedule();
    const std::vector<std::pair<double, int>> table = {{-15, 89}, {-5, 73}, {0, 65}, {5, 57}, {10, 49}, {15, 41}, {20, 33}};
    for (const auto &[snr, k] : table)
        EXPECT_EQ(initial_step(1.0 / db_to_linear(snr), s), k) << "snr=" << snr;
}

TEST(InitialStep, TiesGoToTheSmallerIndex)
{
    // squares 1, 4, 9 make eta^2 = 2.5 and 6.5 exact ties
    const NoiseSchedule s = NoiseSchedule::restore(0.0, -10.0, 1.0, {1.0, 2.0, 3.0});
    EXPECT_EQ(initial_step(2.5, s), 1);
    EXPECT_EQ(initial_step(6.5, s), 2);
}

TEST(InitialStep, NondecreasingInNoiseVariance)
{
    const NoiseSchedule &s = default_schedule();
    int prev = 0;
    for (double db = 50.0; db >= -30.0; db -= 0.25)
    {
        const int k = initial_step(1.0 / db_to_linear(db), s);
        EXPECT_GE(k, prev);
        prev = k;
    }
}

TEST(InitialStep, SmallerGammaNeverNeedsMoreSteps)
{
    const std::vector<double> gammas = {0.2, 0.6, 1.0, 1.6};
    for (double db = -15.0; db <= 20.0; db += 0.5)
    {
        const double eta_sq = 1.0 / db_to_linear(db);
        int prev = 0;
        for (double g : gammas)
        {
            const int k = initial_step(eta_sq, build_schedule(40.0, -22.0, 100, g));
            EXPECT_GE(k, prev) << "snr=" << db << " gamma=" << g;
            prev = k;
        }
    }
}

TEST(InitialStep, NegativeVarianceIsRejected) { EXPECT_THROW(initial_step(-1.0, default_schedule()), Error); }

TEST(SkipIndices, UnitStride)
{
    const std::vector<int> expected = {10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
    EXPECT_EQ(skip_indices(10, 1), expected);
}

TEST(SkipIndices, StrideFour)
{
    const std::vector<int> expected = {10, 6, 2};
    EXPECT_EQ(skip_indices(10, 4), expected);
}

TEST(SkipIndices, MaximalStrideIsOneStep)
{
    const std::vector<int> expected = {7};
    EXPECT_EQ(skip_indices(7, 100), expected);
}

TEST(SkipIndices, LengthIsCeilingForAllPairs)
{
    for (int k = 1; k <= 100; ++k)
        for (int d = 1; d <= 100; ++d)
            ASSERT_EQ(static_cast<int>(skip_indices(k, d).size()), (k + d - 1) / d) << k << "," << d;
}

TEST(SkipIndices, FinalTargetIsZero)
{
    const NoiseSchedule &s = default_schedule();
    EXPECT_EQ(target_sigma(s, 2, 4), 0.0);
    EXPECT_EQ(target_sigma(s, 1, 1), 0.0);
    EXPECT_EQ(target_sigma(s, 10, 4), s.sigma(6));
    EXPECT_THROW(skip_indices(5, 0), Error);
}

TEST(ScheduleRestore, RoundTripsAndValidates)
{
    const NoiseSchedule &s = default_schedule();
    const NoiseSchedule r = NoiseSchedule::restore(40.0, -22.0, 1.0, s.sigmas());
    EXPECT_EQ(r.sigmas(), s.sigmas());
    EXPECT_EQ(r.steps(), 100);
    std::vector<double> bad = s.sigmas();
    std::swap(bad[3], bad[4]);
    EXPECT_THROW(NoiseSchedule::restore(40.0, -22.0, 1.0, bad), Error);
}
