#include "test_support.hpp"

#include <map>
#include <numeric>

namespace eipass::testing {

std::string data_path(const std::string& name) { return std::string(EIPASS_TEST_DATA_DIR) + "/" + name; }

const BuiltSystem& ieee9(bool lossless, MachineKind loads) {
  static std::map<std::pair<bool, MachineKind>, BuiltSystem> cache;
  const auto key = std::make_pair(lossless, loads);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const auto spec = parse_spec(data_path(lossless ? "ieee9_lossless.cfg" : "ieee9.cfg"));
    BuildOptions options;
    options.load_model = loads;
    it = cache.emplace(key, build_system(spec, options)).first;
  }
  return it->second;
}

std::vector<LineParams> random_lines(std::mt19937_64& rng, std::size_t buses, bool lossy,
                                     double max_c) {
  std::uniform_real_distribution<double> b_dist(-20.0, -2.0);
  std::uniform_real_distribution<double> g_dist(0.2, 3.0);
  std::uniform_real_distribution<double> c_dist(0.0, max_c);
  std::vector<LineParams> lines;
  auto make = [&](std::size_t i, std::size_t j) {
    LineParams l;
    l.from_bus = i;
    l.to_bus = j;
    l.b = b_dist(rng);
    l.g = lossy ? g_dist(rng) : 0.0;
    l.c = c_dist(rng);
    lines.push_back(l);
  };
  for (std::size_t i = 1; i < buses; ++i) {
    std::uniform_int_distribution<std::size_t> parent(0, i - 1);
    make(parent(rng), i);
  }
  std::uniform_int_distribution<std::size_t> bus(0, buses - 1);
  const std::size_t extra = buses / 2;
  for (std::size_t k = 0; k < extra; ++k) {
    const auto i = bus(rng);
    const auto j = bus(rng);
    if (i != j) make(i, j);
  }
  return lines;
}

std::vector<MachineParams> random_machines(std::mt19937_64& rng, std::size_t count,
                                           std::size_t two_axis) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::vector<MachineParams> machines;
  for (std::size_t i = 0; i < count; ++i) {
    MachineParams m;
    if (i < two_axis) {
      m.kind = MachineKind::TwoAxis;
      m.Xprime = u(0.05, 0.3);
      m.X = m.Xprime + u(0.1, 1.2);
      m.tau_d = u(1.0, 9.0);
      m.tau_q = u(0.2, 1.0);
      m.M = u(0.02, 0.15);
      m.D = u(0.005, 0.05);
    } else {
      m.kind = MachineKind::Classical;
      m.X = u(0.2, 0.5);
      m.M = u(0.003, 0.02);
      m.D = u(0.001, 0.01);
    }
    m.V_fd = u(0.95, 1.15);
    if (i > 0) m.P_m = u(-0.4, 0.4);
    machines.push_back(m);
  }
  return machines;
}

SystemModel random_model(std::mt19937_64& rng, std::size_t buses, bool lossy) {
  const auto lines = random_lines(rng, buses, lossy);
  std::uniform_int_distribution<std::size_t> k(1, buses);
  auto machines = random_machines(rng, buses, k(rng));
  return make_model(std::move(machines), build_admittance(buses, lines));
}

Equilibrium equilibrium_at_origin(const SystemModel& model) {
  return solve_equilibrium(model, {0.0});
}

std::vector<SweepCell> ieee9_cells(bool lossless, int resolution) {
  SweepSpec spec;
  spec.resolution = resolution;
  const auto result = sweep(ieee9(lossless).model, spec);
  std::vector<SweepCell> out;
  for (const auto& c : result.cells)
    if (c.feasible) out.push_back(c);
  return out;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vector xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

double fd_derivative(const std::function<double(const Vector&)>& f, const Vector& x,
                     Eigen::Index i, double h) {
  Vector xp = x, xm = x;
  xp(i) += h;
  xm(i) -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

double rel_err(const Matrix& a, const Matrix& b) {
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace eipass::testing
