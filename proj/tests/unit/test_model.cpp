#include "mff/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mff;

namespace {
ModelSpec spec(int L, Boundary b = Boundary::periodic, bool nnn = false) {
  return {L, 0.0, 0.0, 0.05, b, nnn, std::nullopt};
}
DisorderRealization zeros(int L) { return {std::vector<double>(static_cast<std::size_t>(L), 0.0)}; }
}  // namespace

TEST(Disorder, ZeroWidthGivesZeros) {
  for (double h : sample_disorder(0.0, 8, 123).h) EXPECT_EQ(h, 0.0);
}

TEST(Disorder, UniformMoments) {
  const int L = 100000;
  const double W = 2.0;
  const auto d = sample_disorder(W, L, 77);
  double s1 = 0, s2 = 0;
  for (double h : d.h) {
    ASSERT_GE(h, -W);
    ASSERT_LE(h, W);
    s1 += h;
  }
  const double mean = s1 / L;
  for (double h : d.h) s2 += (h - mean) * (h - mean);
  const double var = s2 / (L - 1);
  // Var(h) = W^2/3, Var(h^2) = W^4 (1/5 - 1/9)
  EXPECT_NEAR(mean, 0.0, 3.0 * std::sqrt(W * W / 3.0 / L));
  EXPECT_NEAR(var, W * W / 3.0, 3.0 * std::sqrt(std::pow(W, 4) * (1.0 / 5 - 1.0 / 9) / L));
}

TEST(Disorder, Deterministic) {
  EXPECT_EQ(sample_disorder(1.0, 8, 5).h, sample_disorder(1.0, 8, 5).h);
  EXPECT_NE(sample_disorder(1.0, 8, 5).h, sample_disorder(1.0, 8, 6).h);
}

TEST(Disorder, RejectsBadInput) {
  EXPECT_THROW(sample_disorder(-1.0, 8, 0), ParameterError);
  EXPECT_THROW(sample_disorder(1.0, 0, 0), ParameterError);
}

TEST(Hamiltonian, PeriodicRing) {
  const auto H = build_hamiltonian(spec(4), zeros(4)).h_mat;
  MatrixXr want = MatrixXr::Zero(4, 4);
  for (auto [i, j] : {std::pair{0, 1}, {1, 2}, {2, 3}, {3, 0}}) want(i, j) = want(j, i) = 1.0;
  EXPECT_EQ(H, want);
}

TEST(Hamiltonian, OpenChainDropsWrap) {
  const auto H = build_hamiltonian(spec(4, Boundary::open), zeros(4)).h_mat;
  MatrixXr want = MatrixXr::Zero(4, 4);
  for (auto [i, j] : {std::pair{0, 1}, {1, 2}, {2, 3}}) want(i, j) = want(j, i) = 1.0;
  EXPECT_EQ(H, want);
}

TEST(Hamiltonian, NextNearestNeighbours) {
  const auto H = build_hamiltonian(spec(6, Boundary::periodic, true), zeros(6)).h_mat;
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(H(i, (i + 2) % 6), 1.0);
    EXPECT_EQ(H(i, (i + 4) % 6), 1.0);
    EXPECT_EQ(H(i, (i + 1) % 6), 1.0);
    EXPECT_EQ(H(i, (i + 3) % 6), 0.0);
  }
}

TEST(Hamiltonian, DiagonalCarriesDisorder) {
  auto s = spec(8);
  s.W = 1.5;
  const auto d = sample_disorder(1.5, 8, 3);
  const auto H = build_hamiltonian(s, d).h_mat;
  for (int i = 0; i < 8; ++i) EXPECT_EQ(H(i, i), d.h[static_cast<std::size_t>(i)]);
  EXPECT_EQ(H, H.transpose());
}

TEST(Hamiltonian, CleanBandLiesInMinusTwoToTwo) {
  for (int L : {4, 7, 16, 33}) {
    auto s = spec(L);
    Eigen::SelfAdjointEigenSolver<MatrixXr> eig(build_hamiltonian(s, zeros(L)).h_mat);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -2.0 - 1e-10);
    EXPECT_LE(eig.eigenvalues().maxCoeff(), 2.0 + 1e-10);
  }
}

TEST(Hamiltonian, RejectsLengthMismatch) { EXPECT_THROW(build_hamiltonian(spec(4), zeros(5)), ParameterError); }

TEST(Propagator, ZeroStepIsIdentity) {
  const auto P = make_propagator(build_hamiltonian(spec(6), sample_disorder(1.0, 6, 1)), 0.0).prop;
  EXPECT_LT((P - MatrixXc::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Propagator, SingleSiteIsScalarPhase) {
  HoppingMatrix H{MatrixXr::Constant(1, 1, 0.7)};
  const auto P = make_propagator(H, 0.3).prop;
  EXPECT_NEAR(std::abs(P(0, 0) - std::exp(cplx(0, -0.21))), 0.0, 1e-15);
}

TEST(Propagator, UnitaryAndGroupProperty) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = spec(10, trial % 2 ? Boundary::open : Boundary::periodic, trial % 3 == 0);
    s.W = 2.0;
    const auto H = build_hamiltonian(s, sample_disorder(2.0, 10, gen()));
    const double a = 0.013 * (trial + 1), b = 0.07;
    const auto Pa = make_propagator(H, a).prop;
    const auto Pb = make_propagator(H, b).prop;
    const auto Pab = make_propagator(H, a + b).prop;
    EXPECT_LT((Pa * Pa.adjoint() - MatrixXc::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((Pa * Pb - Pab).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Propagator, RejectsNonSymmetric) {
  HoppingMatrix H{MatrixXr::Zero(3, 3)};
  H.h_mat(0, 1) = 1.0;
  EXPECT_THROW(make_propagator(H, 0.05), ParameterError);
}

TEST(ModelSpec, Validation) {
  EXPECT_NO_THROW(spec(8).validate());
  EXPECT_THROW(spec(7).validate(), ParameterError);
  auto s = spec(8);
  s.gamma = -0.1;
  EXPECT_THROW(s.validate(), ParameterError);
  s = spec(8);
  s.dt = 0.0;
  EXPECT_THROW(s.validate(), ParameterError);
  s = spec(7);
  s.filling = 3;
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.particles(), 3);
}

TEST(Boundary, ParsesNames) {
  EXPECT_EQ(parse_boundary("periodic"), Boundary::periodic);
  EXPECT_EQ(parse_boundary("open"), Boundary::open);
  EXPECT_THROW(parse_boundary("twisted"), ParameterError);
}
