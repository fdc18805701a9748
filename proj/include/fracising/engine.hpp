#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fracising/lattice.hpp"
#include "fracising/measurements.hpp"
#include "fracising/types.hpp"

namespace fracising::engine {

using lattice::ClassicalModel;
using lattice::SpinConfiguration;

enum class Algorithm { metropolis, cluster, mixed };

const char* algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

// One Monte Carlo step is: a full Metropolis sweep (metropolis), a single
// cluster flip (cluster), or clusters_per_step cluster flips followed by one
// Metropolis sweep (mixed). Cluster moves require h = 0.
struct RunSpec {
  ClassicalModel model;
  Real beta = 1.0;
  long n_equil = 0;    // equilibration steps to discard; 0 picks the adaptive
                       // default 10 * max(tau_est, 100), re-estimated once
  long n_measure = 1000;
  long thin = 1;       // record every thin-th step
  Algorithm algorithm = Algorithm::mixed;
  int clusters_per_step = 1;
  std::uint64_t seed = 0;
  bool measure_corr = true;

  void validate() const;  // throws std::invalid_argument
};

// N proposals at uniformly random sites, accepted with min(1, e^{-beta dE}).
// Random-scan order keeps the composed sweep kernel reversible.
void metropolis_sweep(SpinConfiguration& config, const ClassicalModel& model, Real beta,
                      Rng& rng);

// Wolff-style cluster flip for the long-range model: aligned spins at x
// distance r join with p(r) = 1 - exp(-2 beta J0 J_L(r)), time neighbors with
// the analogous K_tau probability. Zero-field only.
void cluster_update(SpinConfiguration& config, const ClassicalModel& model, Real beta, Rng& rng);

// Equilibrate, then record every thin-th step. Deterministic given (spec, seed).
MeasurementSeries run(const RunSpec& spec);

// One grid point of a campaign. The id is a stable replica label: the point's
// seed is derive_seed(master_seed, id), so neither listing order nor execution
// order changes any per-point stream.
struct CampaignPoint {
  RunSpec spec;
  std::uint64_t id = 0;
};

struct PointResult {
  std::uint64_t id = 0;
  bool ok = false;
  std::string error;
  MeasurementSeries series;
};

// Runs every point, isolating per-point failures (ok = false, error holds the
// message, the campaign continues). Results are positionally aligned with the
// input. jobs > 1 runs points on a small thread pool.
std::vector<PointResult> campaign(const std::vector<CampaignPoint>& points,
                                  std::uint64_t master_seed, int jobs = 1);

}  // namespace fracising::engine
