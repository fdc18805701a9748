#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fracising/couplings.hpp"
#include "fracising/types.hpp"

namespace fracising::fss {

// One observable traced along the control parameter (T or g) at fixed size.
struct CurvePoint {
  Real control = 0.0;
  Real value = 0.0;
  Real std_error = 0.0;
};

struct ScalingCurve {
  long L = 0;
  std::vector<CurvePoint> points;  // ascending in control
};

struct ExponentEstimate {
  std::string name;
  Real value = 0.0;
  Real std_error = 0.0;
  Real window_lo = 0.0;  // fit window (L range or r range)
  Real window_hi = 0.0;
  Real quality = 0.0;  // reduced chi^2 of the fit, or rms log-residual
};

// ---- pseudo-critical points -------------------------------------------------

struct PeakEstimate {
  Real position = 0.0;
  Real position_err = 0.0;
  Real height = 0.0;
  Real height_err = 0.0;
  long n_fit = 0;
};

// Quadratic fit through the top 5-7 points; vertex = pseudo-critical point.
// Throws std::runtime_error when the maximum sits at the window edge (scan
// wider) and std::invalid_argument on fewer than 5 points.
PeakEstimate locate_peak(const ScalingCurve& curve, std::uint64_t seed = 0x9e11);

struct PseudoCritical {
  long L = 0;
  Real position = 0.0;
  Real err = 0.0;
};

struct TcExtrapolation {
  Real T_c = 0.0;
  Real T_c_err = 0.0;
  Real inv_nu = 0.0;  // shift exponent in T*(L) = T_c + a L^{-1/nu}
  Real inv_nu_err = 0.0;
  Real amplitude = 0.0;
  Real max_residual = 0.0;
};

// Fits T*(L) = T_c + a L^{-1/nu} (>= 3 sizes). Parametric bootstrap over the
// stated per-point errors supplies the stderr fields. Throws
// std::runtime_error (with residuals in the message) when no exponent in the
// scanned range fits.
TcExtrapolation extrapolate_tc(const std::vector<PseudoCritical>& points,
                               std::uint64_t seed = 0x7c03);

// ---- Binder crossings --------------------------------------------------------

struct PairCrossing {
  long L_small = 0;
  long L_large = 0;
  Real control = 0.0;
  Real err = 0.0;
};

struct CrossingResult {
  bool transition = false;
  Real T_c = 0.0;
  Real T_c_err = 0.0;
  std::vector<PairCrossing> crossings;
  std::string note;
};

// Pairwise crossings by linear interpolation on the overlapping control
// window; a pair counts only when the two curves separate beyond 2 sigma on
// both sides. Majority of pairs crossing => transition, with T_c extrapolated
// against the inverse pair size; otherwise "no transition detected".
CrossingResult binder_crossing(const std::vector<ScalingCurve>& curves);

// ---- data collapse -----------------------------------------------------------

struct CollapseParams {
  Real control_c = 0.0;  // T_c or g_c
  Real inv_nu = 1.0;
  Real ratio = 0.0;  // p/nu: L-power of the observable amplitude
};

// Mean squared deviation from the local-linear master curve, normalized per
// point by the combined stderr. kappa > 1 multiplies both L-powers (see
// kappa_exponent). Throws std::runtime_error when nothing overlaps after
// rescaling and std::invalid_argument on fewer than 2 sizes.
Real collapse_quality(const std::vector<ScalingCurve>& curves, const CollapseParams& params,
                      Real kappa = 1.0);

struct CollapseOptions {
  Real control_lo = 0.0;  // search box; 0/0 = derive from the data window
  Real control_hi = 0.0;
  Real inv_nu_lo = 0.15;
  Real inv_nu_hi = 2.8;
  Real ratio_lo = -2.8;
  Real ratio_hi = 2.8;
  Real kappa = 1.0;
  int n_restarts = 20;
  int n_bootstrap = 24;
  std::uint64_t seed = 0xc011;
};

struct CollapseResult {
  CollapseParams params;
  Real S = 0.0;
  Real control_c_err = 0.0;
  Real inv_nu_err = 0.0;
  Real ratio_err = 0.0;
};

// Simplex minimization of collapse_quality over (control_c, 1/nu, ratio) with
// n_restarts starts from a coarse grid; ties broken by lowest S, then smallest
// |1/nu|. Bootstrap over the point errors gives parameter stderrs.
CollapseResult optimize_collapse(const std::vector<ScalingCurve>& curves,
                                 const CollapseOptions& options = {});

// ---- exponents from peak heights ----------------------------------------------

struct PeakScalingPoint {
  long L = 0;
  Real height = 0.0;
  Real err = 0.0;
};

// Weighted log-log fit height ~ L^(p kappa / nu); the returned value is the
// de-rescaled bare ratio p/nu. Throws on non-positive heights or < 3 sizes.
ExponentEstimate exponent_from_peaks(const std::vector<PeakScalingPoint>& points,
                                     const std::string& name, Real kappa = 1.0);

// ---- anomalous dimension -------------------------------------------------------

struct CorrelationData {
  long L = 0;
  ArrayXr r;
  ArrayXr G;
  ArrayXr err;
};

// Joint one-parameter collapse of G r^(d-2+eta) across sizes on the window
// 2 <= r <= L/4; exact on pure power-law input. Throws std::runtime_error
// when the window retains fewer than two usable sizes.
ExponentEstimate extract_eta(const std::vector<CorrelationData>& data, int d,
                             std::uint64_t seed = 0xe7a1);

// ---- critical isotherm ----------------------------------------------------------

struct DeltaOptions {
  bool literal_field_form = false;  // scale h by L^(delta/nu) instead of L^(beta delta/nu)
  Real nu = 1.0;                    // used only by the literal form
  Real kappa = 1.0;
  int n_restarts = 12;
  int n_bootstrap = 20;
  std::uint64_t seed = 0xde17;
};

struct DeltaResult {
  ExponentEstimate delta;
  Real beta_over_nu = 0.0;
  Real field_power = 0.0;  // fitted L-power of the h axis
  Real S = 0.0;
  std::string form;  // "gap" or "literal"
};

// Two-parameter collapse of M L^a against h L^b on curves of M(h) at the
// critical point; delta = b/a under the default gap form (y_h = beta delta),
// or b nu under the literal form. Throws when the h window shows no
// crossover or only a single column.
DeltaResult extract_delta(const std::vector<ScalingCurve>& curves_m_of_h,
                          const DeltaOptions& options = {});

// ---- corrections above the upper critical dimension -----------------------------

// d / (2q) when 2q < d, else 1 (the upper critical dimension is 2q).
Real kappa_exponent(int d, const couplings::FractionalOrder& order);

// Effective L-power used in fits: bare ratio times kappa.
Real qfss_rescale(Real ratio, Real kappa);

// Hyperscaling value 2 - d nu with d replaced by d/kappa above the upper
// critical dimension.
Real hyperscaling_alpha(int d, Real nu, Real kappa);

// ---- Hausdorff dimension ---------------------------------------------------------

struct HausdorffRow {
  Real q = 0.0;
  Real eta = 0.0;
  Real eta_err = 0.0;
  Real H_D = 0.0;  // 2 - eta
  Real H_D_err = 0.0;
};

struct HausdorffReport {
  std::vector<HausdorffRow> rows;
  Real slope = 0.0;  // linear fit of H_D against q
  Real slope_err = 0.0;
  Real intercept = 0.0;
};

struct EtaAtOrder {
  Real q = 0.0;
  ExponentEstimate eta;
};

// H_D = 2 - eta per row plus the weighted linear trend of H_D against q.
HausdorffReport hausdorff_report(const std::vector<EtaAtOrder>& etas);

}  // namespace fracising::fss
