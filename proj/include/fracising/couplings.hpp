#pragma once

#include <optional>
#include <vector>

#include "fracising/types.hpp"

namespace fracising::couplings {

// Order of the fractional derivative generating the interaction law.
// Couplings can be generated for any q > 0; q > 2 changes the sign structure
// of the interactions (an antiferromagnetic power-law tail appears), so the
// simulation entry points accept q <= 2 only.
struct FractionalOrder {
  Real q;

  explicit FractionalOrder(Real q_);
  bool simulable() const { return q <= 2.0; }
  void require_simulable() const;
  bool is_nearest_neighbor() const { return q == 2.0; }
};

// Generalized binomial coefficient binom(q, x) = Gamma(q+1) / (Gamma(x+1) Gamma(q-x+1)),
// evaluated in log space with sign bookkeeping so large arguments neither
// overflow nor lose the sign carried by Gamma at negative arguments.
// Exact zeros are returned when a denominator Gamma sits on a pole.
Real generalized_binomial(Real q, Real x);

// Spin-spin coupling J(r) = (-1)^(r+1) binom(q, q/2 + r), r >= 1.
Real coupling(const FractionalOrder& order, long r);

// J at real separation s >= 1 through the pole-free product form
//   J(s) = Gamma(q+1) sin(pi q / 2) / pi * Gamma(s - q/2) / Gamma(s + 1 + q/2),
// valid for 0 < q < 2 (identically zero at q = 2 beyond s = 1). Used by the
// tail quadrature; agrees with coupling() at integer s.
Real coupling_smooth(const FractionalOrder& order, Real s);

struct CouplingTable {
  FractionalOrder order;
  ArrayXr values;  // J(r), r = 1..r_max stored at values[r-1]
  Real central;    // binom(q, q/2), the r = 0 coefficient

  long r_max() const { return static_cast<long>(values.size()); }
  Real at(long r) const { return values[r - 1]; }
};

// Builds J(1..r_max) by the stable ratio recurrence
//   J(r+1) = J(r) (r - q/2) / (r + 1 + q/2)
// seeded from the Gamma form at r = 1.
CouplingTable build_table(const FractionalOrder& order, long r_max);

// Periodized couplings on a ring of even size L:
//   J_L(r) = sum_{n in Z} J(|r + n L|),  r = 1..L/2.
// Image sums are truncated and closed with an Euler-Maclaurin integral
// correction of the smooth coupling; each entry carries a certified bound on
// the truncation error, required to stay below tail_tolerance.
struct PeriodicCouplingTable {
  FractionalOrder order;
  long L = 0;
  ArrayXr values;       // J_L(r), r = 1..L/2 at values[r-1]
  ArrayXr tail_bounds;  // certified truncation error per entry
  Real tail_tolerance = 0.0;

  Real at(long r) const { return values[r - 1]; }
  // Min-image lookup for a signed separation on the ring.
  Real at_distance(long d) const {
    const long folded = d > L / 2 ? L - d : d;
    return values[folded - 1];
  }
};

PeriodicCouplingTable periodic_table(const CouplingTable& base, long L, Real tail_tolerance);

// Min-image distance couplings J_L(r), r = 1..floor(L/2), on a ring of any
// size L >= 1 (odd rings have no half-way distance class; L = 1 yields an
// empty list). periodic_table is this plus the even-L packaging.
ArrayXr ring_couplings(const FractionalOrder& order, long L, Real tail_tolerance,
                       ArrayXr* bounds_out = nullptr);

// Momentum-space interaction |2 sin(k/2)|^q on the unit-spacing lattice.
Real momentum_coupling(const FractionalOrder& order, Real k);

// One-sided image sum S(rho) = sum_{n >= 0} J(rho + n L), rho = 1..L, with a
// certified truncation bound written to *bound_out when given. S(L) is the
// self-image sum (r = 0 residue class). Building block for periodic tables
// and for the spectral identity on the k-grid.
Real one_sided_image_sum(const FractionalOrder& order, long L, long rho, Real tolerance,
                         Real* bound_out = nullptr);

// sum_{r >= 1} J(r), tail-corrected; the momentum form at k = 0 fixes
// 2 * coupling_sum = binom(q, q/2).
Real coupling_sum(const FractionalOrder& order, Real tolerance, Real* bound_out = nullptr);

// Residual of the spectral identity
//   binom(q,q/2) - 2 sum_{r>=1} J(r) cos(k_m r) - |2 sin(k_m/2)|^q
// evaluated on the full k-grid k_m = 2 pi m / L, m = 0..L/2, with
// tail-corrected real-space sums. Returns the residual per m.
ArrayXr spectral_identity_residuals(const FractionalOrder& order, long L, Real tolerance);

struct LogLogFit {
  Real slope = 0.0;
  Real intercept = 0.0;
  Real slope_stderr = 0.0;
  long n_points = 0;
};

// Least-squares slope of log J vs log r over integer r in [r_lo, r_hi].
// Throws if any coupling in the window is not strictly positive.
LogLogFit fit_log_log(const CouplingTable& table, long r_lo, long r_hi);

// Fitted decay exponent of the coupling law; approaches -(1+q) for large r.
Real asymptotic_exponent(const CouplingTable& table, long r_lo, long r_hi);

// J(r) - A r^{-(1+q)} over [r_lo, r_hi], with the leading amplitude A fitted
// on the far tail of the table (top half-decade) so the subtraction does not
// contaminate the window. The residual decays like r^{-(3+q)}.
struct ResidualSeries {
  ArrayXr r;         // separations in [r_lo, r_hi]
  ArrayXr residual;  // J(r) - amplitude * r^{-(1+q)}
  Real amplitude;    // fitted leading amplitude
};

ResidualSeries residual_subleading(const CouplingTable& table, long r_lo, long r_hi);

// Log-log slope of a residual series (positive entries only demanded, as for
// fit_log_log); approaches -(3+q).
LogLogFit fit_residual_slope(const ResidualSeries& series);

}  // namespace fracising::couplings
