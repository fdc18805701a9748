#pragma once

#include <optional>
#include <vector>

#include "fracising/couplings.hpp"
#include "fracising/types.hpp"

namespace fracising::lattice {

// Periodic 1D ring or 2D torus. On the torus the x axis carries the
// long-range couplings and the y axis is the nearest-neighbor "time"
// direction of the quantum mapping (or the second axis of the isotropic
// nearest-neighbor model when the spatial couplings stop at r = 1).
struct Geometry {
  long Lx = 1;
  long Ly = 1;
  int dimension = 1;

  static Geometry chain(long L);
  static Geometry grid(long Lx, long Ly);

  long sites() const { return Lx * Ly; }
  long index(long x, long y) const { return y * Lx + x; }
  bool operator==(const Geometry&) const = default;
};

struct SpinConfiguration {
  Geometry geom;
  SpinArray spins;  // entries are +1 or -1

  static SpinConfiguration all_up(const Geometry& g);
  static SpinConfiguration random(const Geometry& g, Rng& rng);

  long spin_sum() const;
  Real magnetization() const;  // per-site, in [-1, 1]
};

struct Bond {
  long r;  // distance along the axis
  Real J;  // image-summed coupling at that distance
};

// H = -J0 sum_{x-pairs} J_L(r) s s - K_tau sum_{time steps} s s + h sum_i s_i.
// The field term keeps its printed + sign, so h < 0 favors up spins.
struct ClassicalModel {
  Geometry geom;
  Real J0 = 1.0;
  Real h = 0.0;
  ArrayXr x_couplings;          // J_L(r), r = 1..Lx/2 (min-image, image-summed)
  std::optional<Real> K_tau;    // time-direction bond; required iff 2D
  std::vector<Bond> x_bonds;    // nonzero entries of x_couplings, pruned

  // Long-range ring of length L (odd L allowed; needed by small exact checks).
  static ClassicalModel chain(const couplings::FractionalOrder& order, long L, Real J0, Real h,
                              Real tail_tolerance = 1e-10);
  // Torus with long-range x couplings and nearest-neighbor time bond K_tau.
  // With a q = 2 table and K_tau = J0 this is the isotropic square-lattice model.
  static ClassicalModel grid(const couplings::FractionalOrder& order, long Lx, long Ly, Real J0,
                             Real K_tau, Real h, Real tail_tolerance = 1e-10);
  // Same torus from precomputed distance couplings (the quantum mapping
  // scales them before building the model).
  static ClassicalModel grid_from_couplings(long Lx, long Ly, ArrayXr x_couplings, Real J0,
                                            Real K_tau, Real h);
};

// Total energy; pairs counted once (time steps on a 2-slice torus wrap onto
// the same pair twice, matching the mapped-model convention).
Real energy(const ClassicalModel& model, const SpinConfiguration& config);

// Phi_i = J0 sum_{j != i} J_L(|i-j|) s_j + K_tau (time neighbors); excludes h.
Real local_field(const ClassicalModel& model, const SpinConfiguration& config, long site);

// Energy change of flipping one spin: 2 s_i (Phi_i - h).
Real flip_cost(const ClassicalModel& model, const SpinConfiguration& config, long site);

// Exact thermodynamics by full state-space summation (Gray-code walk).
struct ExactThermo {
  Real beta = 0.0;
  Real log_Z = 0.0;
  Real E_mean = 0.0;     // total energy
  Real E2_mean = 0.0;
  Real m_mean = 0.0;     // per-site magnetization moments
  Real m_abs_mean = 0.0;
  Real m2_mean = 0.0;
  Real m4_mean = 0.0;
  ArrayXr corr;          // <c_r>, c_r = (1/N) sum_i s_i s_{i + r x}, r = 0..Lx/2
};

std::vector<ExactThermo> exact_enumeration(const ClassicalModel& model,
                                           const std::vector<Real>& betas);

}  // namespace fracising::lattice
