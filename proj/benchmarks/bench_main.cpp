#include <eipass/config.hpp>
#include <eipass/dynamics.hpp>
#include <eipass/equilibrium.hpp>
#include <eipass/linear.hpp>
#include <eipass/network.hpp>

#include <benchmark/benchmark.h>

using namespace eipass;

namespace {

const BuiltSystem& table_system(bool lossless) {
  static const BuiltSystem lossy =
      build_system(parse_spec(EIPASS_BENCH_DATA_DIR "/ieee9.cfg"));
  static const BuiltSystem flat =
      build_system(parse_spec(EIPASS_BENCH_DATA_DIR "/ieee9_lossless.cfg"));
  return lossless ? flat : lossy;
}

void BM_KronReduce(benchmark::State& state) {
  const auto& model = table_system(false).model;
  const Vector x = model.network_reactances();
  for (auto _ : state) benchmark::DoNotOptimize(kron_reduce(model.admittance, x));
}
BENCHMARK(BM_KronReduce);

void BM_Rhs(benchmark::State& state) {
  const auto& model = table_system(false).model;
  const auto eq = solve_equilibrium(model, grid_angles(0.2, 0.1));
  const Vector x = eq.z_star.pack(model.layout);
  const auto inputs = make_inputs(model, eq.P_m_star);
  Vector dx(x.size());
  for (auto _ : state) {
    rhs_into(model, x, inputs, dx);
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_Rhs);

void BM_SolveEquilibrium(benchmark::State& state) {
  const auto& model = table_system(false).model;
  for (auto _ : state) benchmark::DoNotOptimize(solve_equilibrium(model, grid_angles(0.4, -0.3)));
}
BENCHMARK(BM_SolveEquilibrium);

void BM_ClassifyCell(benchmark::State& state) {
  const auto& model = table_system(state.range(0) != 0).model;
  const auto eq = solve_equilibrium(model, grid_angles(0.4, -0.3));
  for (auto _ : state) benchmark::DoNotOptimize(classify(model, eq, 0.4, -0.3));
}
BENCHMARK(BM_ClassifyCell)->Arg(0)->Arg(1);

void BM_CertifyNegativeImaginary(benchmark::State& state) {
  const auto& model = table_system(true).model;
  const auto eq = solve_equilibrium(model, grid_angles(0.2, 0.1));
  const auto lm = linearize(model, eq.z_star);
  const Vector grid = log_frequency_grid(1e-3, 1e4, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(certify_negative_imaginary(lm, grid));
}
BENCHMARK(BM_CertifyNegativeImaginary)->Arg(100)->Arg(400);

void BM_Integrate(benchmark::State& state) {
  const auto& model = table_system(false).model;
  const auto eq = solve_equilibrium(model, grid_angles(0.2, 0.1));
  Vector x0 = eq.z_star.pack(model.layout);
  x0(1) += 0.05;
  const auto inputs = make_inputs(model, eq.P_m_star);
  for (auto _ : state) benchmark::DoNotOptimize(integrate(model, x0, inputs, 0.0, 1.0, 0.01));
}
BENCHMARK(BM_Integrate)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
  const auto& model = table_system(false).model;
  SweepSpec spec;
  spec.resolution = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sweep(model, spec));
}
BENCHMARK(BM_Sweep)->Arg(15)->Arg(31)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
