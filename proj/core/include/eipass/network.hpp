#pragma once

#include "eipass/linalg.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace eipass {

/// Default system angular frequency of a 60 Hz grid (rad/s).
inline constexpr double kDefaultOmega0 = 376.99111843077515;

/// Pi-model transmission line. Bus indices are zero-based.
struct LineParams {
  std::size_t from_bus = 0;
  std::size_t to_bus = 0;
  double g = 0.0;  ///< series conductance, >= 0
  double b = 0.0;  ///< series susceptance, <= 0
  double c = 0.0;  ///< total ground capacitance, >= 0 (half at each end)

  bool operator==(const LineParams&) const = default;
};

/// Bus admittance matrix Y = G + jB together with its shunt split
/// B = B0 + diag(beta), B0 the negated weighted Laplacian of the line
/// susceptances.
struct AdmittanceMatrix {
  CMatrix Y;
  Matrix G;
  Matrix B;
  Vector beta;

  Eigen::Index size() const { return Y.rows(); }
  Matrix B0() const;
};

/// Kron-reduced coupling between machine internal EMFs.
struct ReducedNetwork {
  CMatrix Gamma;
  CMatrix Yred;
  Matrix Gred;
  Matrix Bred;
  Vector reactances;
  bool lossless = false;

  /// Definiteness certificate, filled by kron_reduce.
  double gamma_rcond = 0.0;
  double lambda_min_Gred = 0.0;
  double lambda_max_Bred = 0.0;
  /// || G^red diag(1 - beta_i X_i) 1 ||_inf
  double kernel_residual = 0.0;

  Eigen::Index size() const { return Gred.rows(); }
};

struct GammaCertificate {
  bool condition_holds = false;
  /// Buses where beta_i X_i < 1 strictly.
  std::vector<std::size_t> strict_at;
  Vector beta_times_x;
};

/// Validates line data (signs, indices, connectivity) and assembles Y.
/// Throws ValidationError on bad input.
AdmittanceMatrix build_admittance(std::size_t bus_count, std::span<const LineParams> lines,
                                  double omega0 = kDefaultOmega0);

/// Eliminates zero-injection buses by the Schur complement
/// Y_kk - Y_ke Y_ee^{-1} Y_ek. `keep` lists retained buses in output order.
/// beta of the result is taken as Im(Y_red 1), the effective shunt susceptance.
AdmittanceMatrix eliminate_buses(const AdmittanceMatrix& y, std::span<const std::size_t> keep);

/// Sufficient condition beta_i X_i <= 1 for all i, strict for at least one bus.
GammaCertificate check_gamma_nonsingular(const AdmittanceMatrix& y, const Vector& reactances);

/// Gamma = diag(X) - j diag(X) conj(Y) diag(X),  Y^red = -j Gamma^{-1}.
/// Throws SingularityError when Gamma's reciprocal condition is below tol::kSingularRcond.
ReducedNetwork kron_reduce(const AdmittanceMatrix& y, const Vector& reactances);

/// Reduced susceptance with synchronous reactances:
/// -K^{-1},  K = diag(X(1 - beta X)) - diag(X) B0 diag(X).
/// Throws ValidationError when beta_i X_i <= 1 (strict somewhere) fails.
Matrix build_btilred(const AdmittanceMatrix& y, const Vector& sync_reactances);

}  // namespace eipass
