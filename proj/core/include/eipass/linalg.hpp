#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace eipass {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Numerical thresholds shared across modules.
namespace tol {
/// Relative PSD acceptance: lambda_min >= -kPsd * max(1, |lambda_max|).
inline constexpr double kPsd = 1e-8;
/// Strict margin used to operationalize the interior of an equilibrium set.
inline constexpr double kInterior = 1e-8;
/// Eigenvalues inside (-kBoundary, kBoundary) mark a cell as boundary.
inline constexpr double kBoundary = 1e-6;
/// Closed-loop stability: deflated spectral abscissa below -kStability.
inline constexpr double kStability = 1e-8;
/// Reciprocal condition estimate below this is treated as singular.
inline constexpr double kSingularRcond = 1e-12;
/// max |G^red_ij| at or below this marks a network as lossless.
inline constexpr double kLossless = 1e-10;
}  // namespace tol

Matrix symmetrize(const Matrix& a);

/// Eigenvalues of (A + A^T)/2 in ascending order.
Vector sym_eigenvalues(const Matrix& a);

/// PSD test with the relative tolerance convention of tol::kPsd.
bool is_psd(const Matrix& a, double eps = tol::kPsd);

/// Orthonormal basis (n x (n-1)) of the complement of span{v}.
Matrix complement_basis(const Vector& v);

/// Q^T A Q where Q spans the orthogonal complement of `null_direction`.
/// When A maps `null_direction` to zero this removes exactly one zero eigenvalue.
Matrix deflate(const Matrix& a, const Vector& null_direction);

/// Deflation along the all-ones direction of the leading `angle_count`
/// coordinates; the remaining coordinates are kept as they are.
Matrix deflate_angles(const Matrix& a, Eigen::Index angle_count);

CVector eigenvalues(const Matrix& a);

/// max Re(lambda) over the spectrum of a general real matrix.
double spectral_abscissa(const Matrix& a);

/// Real embedding [[Re, -Im], [Im, Re]] of a complex matrix.
Matrix real_embedding(const CMatrix& m);

/// Product of the eigenvalues whose real part exceeds `threshold` (1 if none).
double positive_eigen_product(const CVector& eigs, double threshold);

double max_abs(const Matrix& a);

}  // namespace eipass
