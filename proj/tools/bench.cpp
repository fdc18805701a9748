// Step-rate probe for campaign planning: how many MC steps per second does a
// given (mode, q, L, control) point sustain, and what does tau_int look like.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <string>

#include "fracising/couplings.hpp"
#include "fracising/engine.hpp"
#include "fracising/stats.hpp"
#include "fracising/trotter.hpp"

using namespace fracising;

int main(int argc, char** argv) {
  CLI::App app{"MC step-rate probe"};
  std::string mode = "classical_1d";
  std::string algorithm = "mixed";
  double q = 1.0, control = 1.0, J0 = 1.0, delta_tau = 0.05, aspect = 1.0;
  long L = 64, steps = 500;
  int clusters = 1;
  std::uint64_t seed = 1;
  app.add_option("--mode", mode)->check(CLI::IsMember({"classical_1d", "classical_2d", "quantum_1d"}));
  app.add_option("--q", q);
  app.add_option("--L", L);
  app.add_option("--control", control);  // temperature or transverse field
  app.add_option("--steps", steps);
  app.add_option("--algorithm", algorithm);
  app.add_option("--clusters-per-step", clusters);
  app.add_option("--delta-tau", delta_tau);
  app.add_option("--aspect", aspect);
  app.add_option("--j0", J0);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  const couplings::FractionalOrder order{q};
  engine::RunSpec spec;
  long n_sites = 0;
  if (mode == "quantum_1d") {
    trotter::QuantumSpec qs;
    qs.order = order;
    qs.L = L;
    qs.g = control;
    qs.J0 = J0;
    qs.delta_tau = delta_tau;
    qs.L_tau = trotter::time_slices(L, delta_tau, aspect);
    spec.model = trotter::map_to_classical(qs);
    spec.beta = 1.0;
    n_sites = L * qs.L_tau;
  } else {
    spec.model = mode == "classical_1d"
                     ? lattice::ClassicalModel::chain(order, L, J0, 0.0)
                     : lattice::ClassicalModel::grid(order, L, L, J0, J0, 0.0);
    spec.beta = 1.0 / control;
    n_sites = mode == "classical_1d" ? L : L * L;
  }
  spec.algorithm = engine::parse_algorithm(algorithm);
  spec.clusters_per_step = clusters;
  spec.n_equil = steps / 4;
  spec.n_measure = steps;
  spec.thin = 1;
  spec.seed = seed;
  spec.measure_corr = false;

  const auto t0 = std::chrono::steady_clock::now();
  const MeasurementSeries series = engine::run(spec);
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ArrayXr abs_m(series.rows.size());
  for (std::size_t i = 0; i < series.rows.size(); ++i) abs_m[i] = series.rows[i].abs_m;
  const Real tau = stats::autocorrelation_time(abs_m).tau;
  std::printf("mode=%s q=%g L=%ld n_sites=%ld control=%g algorithm=%s\n", mode.c_str(), q, L,
              n_sites, control, algorithm.c_str());
  std::printf("steps=%ld (+%ld equil) wall=%.3fs rate=%.1f steps/s tau_int(|m|)=%.2f <|m|>=%.4f\n",
              steps, spec.n_equil, dt, (steps + spec.n_equil) / dt, tau, abs_m.mean());
  return 0;
}
