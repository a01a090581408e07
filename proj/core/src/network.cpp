#include "eipass/network.hpp"

#include "eipass/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace eipass {
namespace {

void validate_lines(std::size_t bus_count, std::span<const LineParams> lines) {
  if (bus_count == 0) throw ValidationError("network has no buses");
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto& line = lines[k];
    const std::string where = "line " + std::to_string(k + 1) + " (" +
                              std::to_string(line.from_bus + 1) + "-" +
                              std::to_string(line.to_bus + 1) + ")";
    if (line.from_bus >= bus_count || line.to_bus >= bus_count)
      throw ValidationError(where + ": bus index out of range");
    if (line.from_bus == line.to_bus) throw ValidationError(where + ": from_bus equals to_bus");
    if (!(line.g >= 0.0)) throw ValidationError(where + ": conductance g must be >= 0");
    if (!(line.b <= 0.0)) throw ValidationError(where + ": susceptance b must be <= 0");
    if (!(line.c >= 0.0)) throw ValidationError(where + ": ground capacitance c must be >= 0");
  }

  // union-find connectivity
  std::vector<std::size_t> parent(bus_count);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::size_t components = bus_count;
  for (const auto& line : lines) {
    // a line with y = 0 carries no coupling
    if (line.g == 0.0 && line.b == 0.0) continue;
    const auto a = find(line.from_bus);
    const auto b = find(line.to_bus);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  if (components != 1)
    throw ValidationError("transmission network is disconnected (" + std::to_string(components) +
                          " components)");
}

}  // namespace

Matrix AdmittanceMatrix::B0() const {
  Matrix b0 = B;
  b0.diagonal() -= beta;
  return b0;
}

AdmittanceMatrix build_admittance(std::size_t bus_count, std::span<const LineParams> lines,
                                  double omega0) {
  validate_lines(bus_count, lines);
  const auto n = static_cast<Eigen::Index>(bus_count);

  AdmittanceMatrix out;
  out.G = Matrix::Zero(n, n);
  out.B = Matrix::Zero(n, n);
  out.beta = Vector::Zero(n);
  for (const auto& line : lines) {
    const auto i = static_cast<Eigen::Index>(line.from_bus);
    const auto j = static_cast<Eigen::Index>(line.to_bus);
    out.G(i, j) -= line.g;
    out.G(j, i) -= line.g;
    out.G(i, i) += line.g;
    out.G(j, j) += line.g;
    out.B(i, j) -= line.b;
    out.B(j, i) -= line.b;
    out.B(i, i) += line.b;
    out.B(j, j) += line.b;
    const double shunt = 0.5 * omega0 * line.c;
    out.beta(i) += shunt;
    out.beta(j) += shunt;
  }
  out.B.diagonal() += out.beta;
  out.Y = out.G.cast<Complex>() + Complex(0.0, 1.0) * out.B.cast<Complex>();
  return out;
}

AdmittanceMatrix eliminate_buses(const AdmittanceMatrix& y, std::span<const std::size_t> keep) {
  const Eigen::Index n = y.size();
  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  for (auto k : keep) {
    if (k >= static_cast<std::size_t>(n)) throw ValidationError("retained bus index out of range");
    if (kept[k]) throw ValidationError("bus listed twice in retained set");
    kept[k] = true;
  }
  std::vector<Eigen::Index> drop;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!kept[static_cast<std::size_t>(i)]) drop.push_back(i);

  const auto nk = static_cast<Eigen::Index>(keep.size());
  const auto ne = static_cast<Eigen::Index>(drop.size());
  CMatrix ykk(nk, nk), yke(nk, ne), yek(ne, nk), yee(ne, ne);
  for (Eigen::Index a = 0; a < nk; ++a) {
    const auto i = static_cast<Eigen::Index>(keep[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < nk; ++b)
      ykk(a, b) = y.Y(i, static_cast<Eigen::Index>(keep[static_cast<std::size_t>(b)]));
    for (Eigen::Index b = 0; b < ne; ++b) {
      yke(a, b) = y.Y(i, drop[static_cast<std::size_t>(b)]);
      yek(b, a) = y.Y(drop[static_cast<std::size_t>(b)], i);
    }
  }
  for (Eigen::Index a = 0; a < ne; ++a)
    for (Eigen::Index b = 0; b < ne; ++b)
      yee(a, b) = y.Y(drop[static_cast<std::size_t>(a)], drop[static_cast<std::size_t>(b)]);

  AdmittanceMatrix out;
  if (ne == 0) {
    out.Y = ykk;
  } else {
    Eigen::PartialPivLU<CMatrix> lu(yee);
    if (lu.rcond() < tol::kSingularRcond)
      throw SingularityError("eliminated-bus block of Y is singular");
    out.Y = ykk - yke * lu.solve(yek);
    // restore exact complex symmetry lost to rounding
    out.Y = (0.5 * (out.Y + out.Y.transpose())).eval();
  }
  out.G = out.Y.real();
  out.B = out.Y.imag();
  out.beta = out.B.rowwise().sum();
  return out;
}

GammaCertificate check_gamma_nonsingular(const AdmittanceMatrix& y, const Vector& reactances) {
  if (reactances.size() != y.size())
    throw ValidationError("reactance vector does not match network size");
  GammaCertificate cert;
  cert.beta_times_x = y.beta.cwiseProduct(reactances);
  bool all_leq = true;
  for (Eigen::Index i = 0; i < cert.beta_times_x.size(); ++i) {
    const double v = cert.beta_times_x(i);
    if (v > 1.0) all_leq = false;
    if (v < 1.0) cert.strict_at.push_back(static_cast<std::size_t>(i));
  }
  cert.condition_holds = all_leq && !cert.strict_at.empty();
  return cert;
}

ReducedNetwork kron_reduce(const AdmittanceMatrix& y, const Vector& reactances) {
  const Eigen::Index n = y.size();
  if (reactances.size() != n) throw ValidationError("reactance vector does not match network size");
  if ((reactances.array() <= 0.0).any()) throw ValidationError("reactances must be positive");

  const CMatrix x = reactances.cast<Complex>().asDiagonal();
  ReducedNetwork red;
  red.reactances = reactances;
  red.Gamma = x - Complex(0.0, 1.0) * x * y.Y.conjugate() * x;

  Eigen::PartialPivLU<CMatrix> lu(red.Gamma);
  red.gamma_rcond = lu.rcond();
  if (!(red.gamma_rcond >= tol::kSingularRcond)) {
    const auto cert = check_gamma_nonsingular(y, reactances);
    throw SingularityError(
        std::string("Gamma is numerically singular (rcond = ") + std::to_string(red.gamma_rcond) +
        "); shunt condition beta_i X_i <= 1 " + (cert.condition_holds ? "holds" : "is violated"));
  }
  const CMatrix gamma_inv = lu.inverse();
  red.Yred = Complex(0.0, -1.0) * gamma_inv;
  // Gamma is complex symmetric, so is its inverse; remove rounding asymmetry
  red.Gred = symmetrize(red.Yred.real());
  red.Bred = symmetrize(red.Yred.imag());
  red.lossless = max_abs(red.Gred) <= tol::kLossless;

  const Vector g_eig = sym_eigenvalues(red.Gred);
  const Vector b_eig = sym_eigenvalues(red.Bred);
  red.lambda_min_Gred = g_eig(0);
  red.lambda_max_Bred = b_eig(b_eig.size() - 1);
  const Vector kernel = (Vector::Ones(n) - y.beta.cwiseProduct(reactances));
  red.kernel_residual = n == 0 ? 0.0 : (red.Gred * kernel).cwiseAbs().maxCoeff();
  return red;
}

Matrix build_btilred(const AdmittanceMatrix& y, const Vector& sync_reactances) {
  const auto cert = check_gamma_nonsingular(y, sync_reactances);
  if (!cert.condition_holds)
    throw ValidationError(
        "beta_i X_i <= 1 (strict for at least one bus) fails with synchronous reactances; "
        "M-matrix property of K not guaranteed");
  const Matrix x = sync_reactances.asDiagonal();
  const Matrix k = x - x * y.B * x;
  Eigen::PartialPivLU<Matrix> lu(k);
  if (lu.rcond() < tol::kSingularRcond) throw SingularityError("K matrix is singular");
  return symmetrize(-lu.inverse());
}

}  // namespace eipass
