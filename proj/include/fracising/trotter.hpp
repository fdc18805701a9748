#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fracising/couplings.hpp"
#include "fracising/engine.hpp"
#include "fracising/lattice.hpp"
#include "fracising/types.hpp"

namespace fracising::trotter {

// Transverse-field chain of fractional order q: long-range ferromagnetic
// couplings J0 J(r) along the ring, transverse field g, longitudinal field h.
// Suzuki-Trotter discretization with step delta_tau and L_tau time slices.
struct QuantumSpec {
  couplings::FractionalOrder order{1.0};
  long L = 8;
  Real J0 = 1.0;
  Real g = 1.0;
  Real h = 0.0;
  Real delta_tau = 0.1;
  long L_tau = 2;  // even, >= 2

  void validate() const;  // throws std::invalid_argument
};

// K_tau = -1/2 ln tanh(delta_tau * g). Throws std::range_error when tanh
// rounds to 1 (coupling would underflow to zero) and std::invalid_argument
// when the product is not a positive finite number.
Real time_coupling(Real delta_tau_times_g);

// Smallest even L_tau >= 2 with L_tau * delta_tau >= aspect * L, i.e. the
// imaginary-time extent grows linearly with L (unit dynamical exponent).
long time_slices(long L, Real delta_tau, Real aspect);

// Human-readable tag for manifests recording how L_tau was chosen.
std::string aspect_rule_label(Real delta_tau, Real aspect);

// Anisotropic torus equivalent of the discretized chain: spatial couplings
// scaled by delta_tau * J0, time bond K_tau, field delta_tau * h, to be
// sampled at effective beta = 1.
lattice::ClassicalModel map_to_classical(const QuantumSpec& spec, Real tail_tolerance = 1e-10);

// Shared run parameters for a (sizes x g grid) quantum campaign.
struct QuantumCampaignConfig {
  couplings::FractionalOrder order{1.0};
  Real J0 = 1.0;
  Real h = 0.0;
  Real delta_tau = 0.1;
  Real aspect = 1.0;
  engine::Algorithm algorithm = engine::Algorithm::mixed;
  int clusters_per_step = 1;
  long n_equil = 0;
  long n_measure = 1000;
  long thin = 1;
  bool measure_corr = true;
};

struct QuantumPointResult {
  long L = 0;
  Real g = 0.0;
  Real delta_tau = 0.0;
  long L_tau = 0;
  engine::PointResult result;
};

// One replica per (L, g) pair, ids flattened row-major over (sizes, g_grid);
// the control parameter is g, played at fixed effective beta = 1.
std::vector<QuantumPointResult> quantum_campaign(const std::vector<long>& sizes,
                                                 const std::vector<Real>& g_grid,
                                                 const QuantumCampaignConfig& config,
                                                 std::uint64_t master_seed, int jobs = 1);

}  // namespace fracising::trotter
