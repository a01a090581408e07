#include "test_support.hpp"

#include <eipass/errors.hpp>
#include <eipass/network.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace eipass;
using eipass::testing::random_lines;

namespace {

std::vector<LineParams> ieee9_lines(bool lossy, bool with_c) {
  auto lines =
      parse_spec(eipass::testing::data_path(lossy ? "ieee9.cfg" : "ieee9_lossless.cfg")).lines;
  if (!with_c)
    for (auto& l : lines) l.c = 0.0;
  return lines;
}

Vector ieee9_transient_reactances() {
  // generators at buses 1-3 (X'), motor loads at 5, 6, 8 (X)
  Vector x(6);
  x << 0.0608, 0.1198, 0.1813, 0.3, 0.3, 0.3;
  return x;
}

Vector ieee9_sync_reactances() {
  Vector x(6);
  x << 0.1460, 0.8958, 1.3120, 0.3, 0.3, 0.3;
  return x;
}

AdmittanceMatrix ieee9_reduced_buses(bool lossy, bool with_c = true) {
  const auto full = build_admittance(9, ieee9_lines(lossy, with_c));
  const std::vector<std::size_t> keep{0, 1, 2, 4, 5, 7};
  return eliminate_buses(full, keep);
}

}  // namespace

TEST(BuildAdmittance, Ieee9OffDiagonalEntryIsNegatedLineAdmittance) {
  const auto y = build_admittance(9, ieee9_lines(true, true));
  EXPECT_DOUBLE_EQ(y.Y(3, 4).real(), -1.3650);
  EXPECT_DOUBLE_EQ(y.Y(3, 4).imag(), 11.604);
}

TEST(BuildAdmittance, Ieee9DiagonalSumsSeriesAndHalfShunt) {
  const auto y = build_admittance(9, ieee9_lines(true, true));
  // bus 4 touches lines (1,4), (4,5), (4,6)
  const double w0 = kDefaultOmega0;
  const Complex expected = Complex(0.0, -17.361) + Complex(1.3650, -11.604) +
                           Complex(1.9420, -10.511) +
                           Complex(0.0, w0 * (0.4669e-3 + 0.4191e-3) / 2.0);
  EXPECT_NEAR(y.Y(3, 3).real(), expected.real(), 1e-12);
  EXPECT_NEAR(y.Y(3, 3).imag(), expected.imag(), 1e-12);
  EXPECT_NEAR(y.beta(3), w0 * (0.4669e-3 + 0.4191e-3) / 2.0, 1e-15);
}

TEST(BuildAdmittance, TwoBusLosslessByHand) {
  const std::vector<LineParams> lines{{0, 1, 0.0, -1.0, 0.0}};
  const auto y = build_admittance(2, lines);
  EXPECT_EQ(y.G, Matrix::Zero(2, 2));
  Matrix b(2, 2);
  b << -1, 1, 1, -1;
  EXPECT_EQ(y.B, b);
}

TEST(BuildAdmittance, Ieee9ConductanceRowSumsVanish) {
  const auto y = build_admittance(9, ieee9_lines(true, true));
  EXPECT_LE(y.G.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildAdmittance, RejectsDisconnectedNetwork) {
  const std::vector<LineParams> lines{{0, 1, 0.0, -1.0, 0.0}, {2, 3, 0.0, -1.0, 0.0}};
  EXPECT_THROW(build_admittance(4, lines), ValidationError);
}

TEST(BuildAdmittance, RejectsSignViolations) {
  EXPECT_THROW(build_admittance(2, std::vector<LineParams>{{0, 1, -0.1, -1.0, 0.0}}), ValidationError);
  EXPECT_THROW(build_admittance(2, std::vector<LineParams>{{0, 1, 0.0, 1.0, 0.0}}), ValidationError);
  EXPECT_THROW(build_admittance(2, std::vector<LineParams>{{0, 1, 0.0, -1.0, -1e-3}}), ValidationError);
  EXPECT_THROW(build_admittance(2, std::vector<LineParams>{{1, 1, 0.0, -1.0, 0.0}}), ValidationError);
}

TEST(KronReduce, Ieee9DefinitenessCertificate) {
  const auto red = kron_reduce(ieee9_reduced_buses(true), ieee9_transient_reactances());
  EXPECT_GE(sym_eigenvalues(red.Gred)(0), -1e-9);
  EXPECT_LT(sym_eigenvalues(red.Bred)(5), -1e-9);
  EXPECT_FALSE(red.lossless);
}

TEST(KronReduce, LosslessNoShuntVariantHasZeroReducedConductance) {
  const auto red = kron_reduce(ieee9_reduced_buses(false, false), ieee9_transient_reactances());
  EXPECT_LE(max_abs(red.Gred), 1e-12);
  EXPECT_TRUE(red.lossless);
}

TEST(KronReduce, TwoBusMatchesDirectComplexInversion) {
  const std::vector<LineParams> lines{{0, 1, 0.0, -5.0, 0.0}};
  const auto y = build_admittance(2, lines);
  Vector x(2);
  x << 0.1, 0.2;
  const auto red = kron_reduce(y, x);

  // Gamma by hand, then the closed-form 2x2 inverse
  const Complex j(0.0, 1.0);
  const Complex y01 = y.Y(0, 1), y00 = y.Y(0, 0), y11 = y.Y(1, 1);
  const Complex g00 = x(0) - j * x(0) * std::conj(y00) * x(0);
  const Complex g01 = -j * x(0) * std::conj(y01) * x(1);
  const Complex g11 = x(1) - j * x(1) * std::conj(y11) * x(1);
  const Complex det = g00 * g11 - g01 * g01;
  const Complex inv00 = g11 / det, inv01 = -g01 / det, inv11 = g00 / det;
  EXPECT_NEAR(std::abs(red.Yred(0, 0) - (-j * inv00)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(red.Yred(0, 1) - (-j * inv01)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(red.Yred(1, 1) - (-j * inv11)), 0.0, 1e-12);
}

TEST(KronReduce, RealEmbeddingInverseAgreesOnRandomLossyNetwork) {
  std::mt19937_64 rng(11);
  const auto lines = random_lines(rng, 5, true);
  const auto y = build_admittance(5, lines);
  Vector x(5);
  x << 0.1, 0.15, 0.2, 0.25, 0.3;
  const auto red = kron_reduce(y, x);
  const Matrix emb_inv = real_embedding(red.Gamma).inverse();
  // -j (M + jN) = N - jM, so Gred = Im(Gamma^{-1}), Bred = -Re(Gamma^{-1})
  const Matrix re = emb_inv.topLeftCorner(5, 5);
  const Matrix im = emb_inv.bottomLeftCorner(5, 5);
  EXPECT_LE(max_abs(red.Gred - im), 1e-10);
  EXPECT_LE(max_abs(red.Bred + re), 1e-10);
}

TEST(KronReduce, ThrowsWhenGammaSingular) {
  // single bus with beta X' = 1 makes Gamma exactly zero
  AdmittanceMatrix y;
  y.G = Matrix::Zero(1, 1);
  y.beta = Vector::Constant(1, 10.0);
  y.B = Matrix::Constant(1, 1, 10.0);
  y.Y = Complex(0.0, 1.0) * y.B.cast<Complex>();
  EXPECT_THROW(kron_reduce(y, Vector::Constant(1, 0.1)), SingularityError);
}

TEST(GammaCondition, Ieee9Holds) {
  const auto cert = check_gamma_nonsingular(ieee9_reduced_buses(true), ieee9_transient_reactances());
  EXPECT_TRUE(cert.condition_holds);
  EXPECT_EQ(cert.strict_at.size(), 6u);
}

TEST(GammaCondition, ZeroCapacitanceHoldsStrictlyEverywhere) {
  const auto y = build_admittance(9, ieee9_lines(true, false));
  const auto cert = check_gamma_nonsingular(y, Vector::Constant(9, 0.2));
  EXPECT_TRUE(cert.condition_holds);
  EXPECT_EQ(cert.strict_at.size(), 9u);
  EXPECT_EQ(y.beta, Vector::Zero(9));
}

TEST(GammaCondition, InflatedCapacitanceFails) {
  // beta_1 = w0 c / 2 chosen so that beta_1 X'_1 = 1.5
  const double xp = 0.1;
  const double c = 2.0 * 1.5 / (xp * kDefaultOmega0);
  const std::vector<LineParams> lines{{0, 1, 0.0, -5.0, c}};
  const auto y = build_admittance(2, lines);
  Vector x(2);
  x << xp, 0.01;
  const auto cert = check_gamma_nonsingular(y, x);
  EXPECT_NEAR(cert.beta_times_x(0), 1.5, 1e-12);
  EXPECT_FALSE(cert.condition_holds);
}

TEST(BuildBtilred, Ieee9LosslessEntriesNonPositive) {
  const auto b = build_btilred(ieee9_reduced_buses(false), ieee9_sync_reactances());
  EXPECT_LE(b.maxCoeff(), 1e-12);
}

TEST(BuildBtilred, SingleBusIsMinusInverseReactance) {
  const auto y = build_admittance(1, std::vector<LineParams>{});
  const auto b = build_btilred(y, Vector::Constant(1, 0.5));
  EXPECT_DOUBLE_EQ(b(0, 0), -2.0);
}

TEST(BuildBtilred, TwoBusMatchesDirectInversion) {
  const auto y = build_admittance(2, std::vector<LineParams>{{0, 1, 0.0, -4.0, 0.0}});
  const auto b = build_btilred(y, Vector::Constant(2, 0.3));
  // K = diag(X) - X B X with B = [[-4, 4], [4, -4]]
  const double k00 = 0.3 + 0.09 * 4.0, k01 = -0.09 * 4.0;
  const double det = k00 * k00 - k01 * k01;
  EXPECT_NEAR(b(0, 0), -k00 / det, 1e-12);
  EXPECT_NEAR(b(0, 1), k01 / det, 1e-12);
  EXPECT_NEAR(b(1, 1), -k00 / det, 1e-12);
}

TEST(BuildBtilred, RejectsViolatedShuntCondition) {
  const double c = 2.0 * 2.0 / kDefaultOmega0;  // beta = 2 at both ends
  const auto y = build_admittance(2, std::vector<LineParams>{{0, 1, 0.0, -4.0, c}});
  EXPECT_THROW(build_btilred(y, Vector::Constant(2, 1.0)), ValidationError);
}

TEST(EliminateBuses, PreservesLosslessnessAndSymmetry) {
  const auto y = ieee9_reduced_buses(false);
  EXPECT_LE(max_abs(y.G), 1e-13);
  EXPECT_LE(max_abs(y.B - y.B.transpose()), 1e-13);
}

TEST(NetworkProperties, RandomSpecsSatisfyLaplacianInvariants) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
    const auto y = build_admittance(n, random_lines(rng, n, trial % 2 == 0));
    EXPECT_LE(y.G.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(sym_eigenvalues(y.G)(0), -1e-10);
    const Vector b0 = sym_eigenvalues(y.B0());
    EXPECT_LE(b0(b0.size() - 1), 1e-10);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      for (Eigen::Index j = 0; j < y.size(); ++j)
        if (i != j) EXPECT_LE(y.G(i, j), 0.0);
  }
}

TEST(NetworkProperties, ReducedConductanceKernel) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xd(0.05, 0.4);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 6);
    const auto y = build_admittance(n, random_lines(rng, n, true));
    Vector x(static_cast<Eigen::Index>(n));
    for (auto& v : x) v = xd(rng);
    const auto red = kron_reduce(y, x);
    const Vector kernel = Vector::Ones(x.size()) - y.beta.cwiseProduct(x);
    EXPECT_LE((red.Gred * kernel).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(red.kernel_residual, 1e-9);
    EXPECT_GE(red.lambda_min_Gred, -1e-9);
    EXPECT_LT(red.lambda_max_Bred, 0.0);
  }
}

TEST(NetworkProperties, LosslessIffReducedConductanceVanishes) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> xd(0.05, 0.4);
  for (int trial = 0; trial < 100; ++trial) {
    const bool lossy = trial % 2 == 1;
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
    const auto y = build_admittance(n, random_lines(rng, n, lossy));
    Vector x(static_cast<Eigen::Index>(n));
    for (auto& v : x) v = xd(rng);
    const auto red = kron_reduce(y, x);
    EXPECT_EQ(max_abs(y.G) == 0.0, max_abs(red.Gred) <= 1e-10) << "trial " << trial;
  }
}

TEST(NetworkProperties, BtilredEntriesNonPositiveUnderShuntCondition) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> xd(0.1, 1.5);
  int checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 8);
    const auto y = build_admittance(n, random_lines(rng, n, trial % 3 == 0, 2e-3));
    Vector x(static_cast<Eigen::Index>(n));
    for (auto& v : x) v = xd(rng);
    if (!check_gamma_nonsingular(y, x).condition_holds) continue;
    EXPECT_LE(build_btilred(y, x).maxCoeff(), 1e-10);
    ++checked;
  }
  EXPECT_GE(checked, 50);
}
