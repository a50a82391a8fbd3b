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

#include <numbers>

using namespace sbmce;
using sbmce::testing::random_vector;
using sbmce::testing::rel_err;

TEST(UnitaryDft, SizeOneIsIdentity)
{
    const CMatrix f = unitary_dft(1);
    ASSERT_EQ(f.rows(), 1);
    EXPECT_NEAR(std::abs(f(0, 0) - Complex(1.0, 0.0)), 0.0, 1e-15);
}

TEST(UnitaryDft, SizeTwoMatchesHadamard)
{
    const CMatrix f = unitary_dft(2);
    const double s = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(f(0, 0) - s), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(f(0, 1) - s), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(f(1, 0) - s), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(f(1, 1) + s), 0.0, 1e-15);
}

TEST(UnitaryDft, IsUnitaryForAllSmallSizes)
{
    for (Eigen::Index n = 1; n <= 64; ++n)
    {
        const CMatrix f = unitary_dft(n);
        EXPECT_LT((f * f.adjoint() - CMatrix::Identity(n, n)).norm(), 1e-12) << "n=" << n;
    }
}

TEST(UnitaryDft, EntriesFollowTheExponentialDefinition)
{
    const Eigen::Index n = 8;
    const CMatrix f = unitary_dft(n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
        {
            const Complex expected =
                std::polar(1.0 / std::sqrt(8.0), -2.0 * std::numbers::pi * static_cast<double>(r * c) / 8.0);
            EXPECT_NEAR(std::abs(f(r, c) - expected), 0.0, 1e-14);
        }
}

TEST(UnitaryDft, ZeroSizeIsRejected)
{
    try
    {
        unitary_dft(0);
        FAIL() << "expected an error";
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::Dimension);
    }
}

TEST(Beamspace, MatchesDenseKroneckerForAllDimsUpToFour)
{
    Rng rng(11);
    for (Eigen::Index nr = 1; nr <= 4; ++nr)
        for (Eigen::Index nt = 1; nt <= 4; ++nt)
        {
            const CMatrix dense = kron(unitary_dft(nt), unitary_dft(nr));
            for (Eigen::Index j = 0; j < nr * nt; ++j)
            {
                CVector e = CVector::Zero(nr * nt);
                e[j] = 1.0;
                EXPECT_LT((beamspace(e, nr, nt) - dense * e).norm(), 1e-12);
            }
            const CVector h = random_vector(nr * nt, rng);
            EXPECT_LT((beamspace(h, nr, nt) - dense * h).norm(), 1e-12 * (1.0 + h.norm()));
            EXPECT_LT((inverse_beamspace(h, nr, nt) - dense.adjoint() * h).norm(), 1e-12 * (1.0 + h.norm()));
        }
}

TEST(Beamspace, UnitEntryTwoByTwoAgainstHandKronecker)
{
    CVector e1 = CVector::Zero(4);
    e1[0] = 1.0;
    // (F2 (x) F2) e1 is the first column: all entries 1/2
    const CVector b = beamspace(e1, 2, 2);
    for (Eigen::Index i = 0; i < 4; ++i)
        EXPECT_NEAR(std::abs(b[i] - Complex(0.5, 0.0)), 0.0, 1e-15);
}

TEST(Beamspace, ZeroMapsToZero)
{
    EXPECT_EQ(beamspace(CVector::Zero(64), 16, 4).norm(), 0.0);
    EXPECT_EQ(inverse_beamspace(CVector::Zero(64), 16, 4).norm(), 0.0);
}

TEST(Beamspace, PreservesNormAndRoundTrips)
{
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial)
    {
        const CVector h = random_vector(64, rng);
        const CVector b = beamspace(h, 16, 4);
        EXPECT_NEAR(b.norm(), h.norm(), 1e-10 * h.norm());
        EXPECT_LT(rel_err(inverse_beamspace(b, 16, 4), h), 1e-10);
    }
}

TEST(Beamspace, InverseIsTheAdjoint)
{
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial)
    {
        const CVector a = random_vector(32, rng);
        const CVector b = random_vector(32, rng);
        const Complex lhs = beamspace(a, 8, 4).dot(b);
        const Complex rhs = a.dot(inverse_beamspace(b, 8, 4));
        EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-10 * (1.0 + std::abs(lhs)));
    }
}

TEST(Beamspace, ColumnBatchMatchesSingleVectors)
{
    Rng rng(5);
    const Beamspace bs(8, 2);
    CMatrix batch(16, 5);
    for (Eigen::Index j = 0; j < 5; ++j)
        batch.col(j) = random_vector(16, rng);
    const CMatrix fwd = bs.forward_columns(batch);
    const CMatrix inv = bs.inverse_columns(batch);
    for (Eigen::Index j = 0; j < 5; ++j)
    {
        EXPECT_LT((fwd.col(j) - bs.forward(batch.col(j))).norm(), 1e-13);
        EXPECT_LT((inv.col(j) - bs.inverse(batch.col(j))).norm(), 1e-13);
    }
}

TEST(Beamspace, LengthMismatchIsADimensionError)
{
    try
    {
        beamspace(CVector::Zero(7), 2, 4);
        FAIL() << "expected an error";
    }
    catch (const Error &e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::Dimension);
    }
}

TEST(CircularGaussian, ZeroVarianceGivesZeros)
{
    Rng rng(1);
    EXPECT_EQ(draw_circular_gaussian(100, 0.0, rng).norm(), 0.0);
}

TEST(CircularGaussian, SecondMomentsMatchTheVariance)
{
    Rng rng(2);
    const CVector x = draw_circular_gaussian(100000, 1.0, rng);
    const double mean_abs2 = x.squaredNorm() / 1e5;
    EXPECT_GE(mean_abs2, 0.99);
    EXPECT_LE(mean_abs2, 1.01);
    const double re2 = x.real().squaredNorm() / 1e5;
    const double im2 = x.imag().squaredNorm() / 1e5;
    EXPECT_NEAR(re2, 0.5, 0.01);
    EXPECT_NEAR(im2, 0.5, 0.01);
    // circular: E[x^2] = 0
    Complex pseudo(0.0, 0.0);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        pseudo += x[i] * x[i];
    EXPECT_LT(std::abs(pseudo) / 1e5, 0.02);
}

TEST(CircularGaussian, SameSeedRepeatsBitwise)
{
    Rng a(99), b(99);
    const CVector x = draw_circular_gaussian(1000, 2.5, a);
    const CVector y = draw_circular_gaussian(1000, 2.5, b);
    EXPECT_EQ(x, y);
}

TEST(CircularGaussian, NegativeVarianceIsRejected)
{
    Rng rng(0);
    EXPECT_THROW(draw_circular_gaussian(4, -1.0, rng), Error);
}

TEST(Rng, SplitStreamsDifferAndAreReproducible)
{
    const Rng root(7);
    Rng a1 = root.split(1), a2 = root.split(1), b = root.split(2);
    const double x1 = a1.normal(), x2 = a2.normal(), y = b.normal();
    EXPECT_EQ(x1, x2);
    EXPECT_NE(x1, y);
    EXPECT_STREQ(Rng::algorithm(), "mt19937_64");
}

TEST(HermitianSolve, SolvesWellConditionedSystems)
{
    Rng rng(8);
    const CMatrix a = sbmce::testing::random_hpd(12, rng);
    const CMatrix b = sbmce::testing::random_matrix(12, 3, rng);
    const SolveResult r = hermitian_solve(a, b);
    EXPECT_FALSE(r.regularized);
    EXPECT_LT((a * r.x - b).norm(), 1e-10 * b.norm());
}

TEST(HermitianSolve, SingularMatrixFallsBackAndIsFlagged)
{
    // rank-one PSD matrix: Cholesky fails even with jitter 1e-6 relative to ~1e6 scale
    CVector u = CVector::Ones(6) * 1000.0;
    const CMatrix a = u * u.adjoint();
    const CVector b = u;
    const SolveResult r = hermitian_solve(a, b);
    EXPECT_TRUE(r.regularized);
    EXPECT_TRUE(r.x.allFinite());
    EXPECT_LT((a * r.x - b).norm(), 1e-6 * b.norm());
}

TEST(HermitianFactor, LogDetMatchesEigenvalues)
{
    Rng rng(9);
    const CMatrix a = sbmce::testing::random_hpd(10, rng);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
    const double expected = es.eigenvalues().array().log().sum();
    EXPECT_NEAR(HermitianFactor(a).log_det(), expected, 1e-10);
}

TEST(Kron, MatchesDefinition)
{
    Rng rng(10);
    const CMatrix a = sbmce::testing::random_matrix(2, 3, rng);
    const CMatrix b = sbmce::testing::random_matrix(3, 2, rng);
    const CMatrix k = kron(a, b);
    ASSERT_EQ(k.rows(), 6);
    ASSERT_EQ(k.cols(), 6);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 2; ++c)
                    EXPECT_EQ(k(i * 3 + r, j * 2 + c), a(i, j) * b(r, c));
}
