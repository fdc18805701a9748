#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fracising/measurements.hpp"
#include "fracising/types.hpp"

namespace fracising::stats {

struct ObservableEstimate {
  std::string name;       // "M", "chi", "C", "U", "G"
  Real value = 0.0;
  Real std_error = 0.0;
  Real tau_int = 0.5;     // sweeps between effectively independent samples / 2
  Real n_effective = 0.0;
  bool flagged = false;   // degenerate input or no binning plateau
};

struct TauEstimate {
  Real tau = 0.5;
  bool flagged = false;
};

// Integrated autocorrelation time by binning: tau(b) = b Var(bin means) /
// (2 Var(x)) climbs to a plateau as the bin size b doubles. Convention:
// tau = 0.5 for uncorrelated data. If no plateau is reached before bins run
// out, the largest-bin value is returned flagged.
TauEstimate autocorrelation_time(const ArrayXr& series);

// Block bootstrap for a scalar estimator over a (rows = measurements,
// cols = quantities) matrix. Blocks of length block_len are resampled with
// replacement; the estimator sees a matrix of the same shape built from the
// chosen blocks. Requires at least 20 full blocks.
struct BootstrapResult {
  Real value = 0.0;      // estimator on the original data
  Real std_error = 0.0;  // std dev over resamples
};

using MatrixEstimator = std::function<Real(const MatrixXr&)>;

BootstrapResult block_bootstrap(const MatrixXr& data, long block_len,
                                const MatrixEstimator& estimator, int n_resamples, Rng& rng);

enum class MConvention { abs_m, signed_m };

struct EstimateOptions {
  MConvention m_convention = MConvention::abs_m;
  bool binder_literal_denominator = false;  // 3<m2> instead of 3<m2>^2
  int n_resamples = 200;
  std::uint64_t seed = 0x5eedul;
};

struct Estimates {
  ObservableEstimate M;
  ObservableEstimate chi;  // n_sites (<m2> - M^2)
  ObservableEstimate C;    // n_sites (<e2> - <e>^2) / T^2, e per site
  ObservableEstimate U;    // 1 - <m4> / (3 <m2>^2) by default
  std::vector<ObservableEstimate> G;  // connected correlator per r (if measured)
};

// The estimator set with bootstrap errors and per-column autocorrelation
// times. Throws below 100 measurements.
Estimates estimate_observables(const MeasurementSeries& series, const EstimateOptions& options = {});

// Connected correlator G(r) = <c_r> - <m>^2 from the pre-binned block means,
// with block-to-block scatter as the error bar.
std::vector<ObservableEstimate> correlation_estimates(const MeasurementSeries& series);

}  // namespace fracising::stats
