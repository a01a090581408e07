#include "eipass/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace eipass {

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Vector sym_eigenvalues(const Matrix& a) {
  if (a.rows() == 0) return Vector{};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

bool is_psd(const Matrix& a, double eps) {
  if (a.rows() == 0) return true;
  const Vector lambda = sym_eigenvalues(a);
  const double scale = std::max(1.0, std::abs(lambda(lambda.size() - 1)));
  return lambda(0) >= -eps * scale;
}

Matrix complement_basis(const Vector& v) {
  const Eigen::Index n = v.size();
  if (n <= 1) return Matrix(n, 0);
  Eigen::HouseholderQR<Matrix> qr(v.normalized());
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(n - 1);
}

Matrix deflate(const Matrix& a, const Vector& null_direction) {
  const Matrix q = complement_basis(null_direction);
  return q.transpose() * a * q;
}

Matrix deflate_angles(const Matrix& a, Eigen::Index angle_count) {
  Vector direction = Vector::Zero(a.rows());
  direction.head(angle_count).setOnes();
  return deflate(a, direction);
}

CVector eigenvalues(const Matrix& a) {
  if (a.rows() == 0) return CVector{};
  Eigen::EigenSolver<Matrix> solver(a, false);
  return solver.eigenvalues();
}

double spectral_abscissa(const Matrix& a) {
  const CVector lambda = eigenvalues(a);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& l : lambda) best = std::max(best, l.real());
  return best;
}

Matrix real_embedding(const CMatrix& m) {
  const Eigen::Index n = m.rows();
  const Eigen::Index k = m.cols();
  Matrix out(2 * n, 2 * k);
  out.topLeftCorner(n, k) = m.real();
  out.topRightCorner(n, k) = -m.imag();
  out.bottomLeftCorner(n, k) = m.imag();
  out.bottomRightCorner(n, k) = m.real();
  return out;
}

double positive_eigen_product(const CVector& eigs, double threshold) {
  // complex pairs contribute |lambda|^2, so the product stays real
  Complex product = 1.0;
  for (const auto& l : eigs) {
    if (l.real() > threshold) product *= l;
  }
  return product.real();
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace eipass
