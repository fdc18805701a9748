#include "fracising/couplings.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fracising::couplings {

namespace {

constexpr Real kPi = 3.14159265358979323846;

struct SignedLogGamma {
  Real log_abs = 0.0;
  int sign = 1;
  bool pole = false;
};

// log|Gamma(x)| with explicit sign; poles at non-positive integers flagged.
SignedLogGamma lgamma_signed(Real x) {
  SignedLogGamma out;
  if (x > 0.0) {
    out.log_abs = std::lgamma(x);
    return out;
  }
  if (x == std::floor(x)) {
    out.pole = true;
    return out;
  }
  out.log_abs = std::lgamma(x);
  // Gamma alternates sign between consecutive negative integers,
  // negative on (-1, 0), positive on (-2, -1), and so on.
  const long k = static_cast<long>(std::floor(-x));
  out.sign = (k % 2 == 1) ? 1 : -1;
  return out;
}

// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on P_n.
void gauss_legendre(int n, std::vector<Real>& nodes, std::vector<Real>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    Real x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    Real dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      Real p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const Real p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const Real dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[n - 1 - i] = weights[i];
  }
}

// log J(s) for 0 < q < 2, taking log(s) so separations far beyond double
// range stay usable. Subtracting two lgamma values of size s ln s loses
// ~s*eps absolute, so past s = 30 the difference is formed through the
// Stirling series rearranged so no large terms cancel:
//   lnG(x1) - lnG(x2) = -d ln x2 + (x1 - 1/2) log1p(-d/x2) + d
//                       + sum B_2n/(2n(2n-1)) (x1^{1-2n} - x2^{1-2n}),
// with x1 = s - q/2, x2 = s + 1 + q/2, d = x2 - x1 = 1 + q.
Real log_coupling_smooth(const FractionalOrder& order, Real log_s) {
  const Real q = order.q;
  const Real log_amp =
      std::lgamma(q + 1.0) + std::log(std::sin(kPi * q / 2.0)) - std::log(kPi);
  if (log_s > 600.0) return log_amp - (1.0 + q) * log_s;  // corrections underflow
  const Real s = std::exp(log_s);
  if (s <= 30.0)
    return log_amp + std::lgamma(s - q / 2.0) - std::lgamma(s + 1.0 + q / 2.0);
  const Real x1 = s - q / 2.0;
  const Real x2 = s + 1.0 + q / 2.0;
  const Real d = 1.0 + q;
  const Real main = -d * std::log(x2) + (x1 - 0.5) * std::log1p(-d / x2) + d;
  const Real corr = (1.0 / (12.0 * x1) - 1.0 / (12.0 * x2)) -
                    (1.0 / (360.0 * x1 * x1 * x1) - 1.0 / (360.0 * x2 * x2 * x2)) +
                    (1.0 / (1260.0 * std::pow(x1, 5)) - 1.0 / (1260.0 * std::pow(x2, 5)));
  return log_amp + main + corr;
}

// integral_{s0}^{inf} J(s) ds for 0 < q < 2, via s = s0 * u^(-1/q) which maps
// the power-law tail onto a nearly constant integrand on u in (0, 1]:
//   integral = (s0 / q) * integral_0^1 J(s0 u^(-1/q)) u^(-1/q - 1) du.
// Evaluated in log space; small q pushes s far outside double range.
// Returns the 64-node value; *err_estimate gets |I64 - I32|.
Real tail_integral(const FractionalOrder& order, Real s0, Real* err_estimate) {
  static thread_local std::vector<Real> x32, w32, x64, w64;
  if (x32.empty()) {
    gauss_legendre(32, x32, w32);
    gauss_legendre(64, x64, w64);
  }
  const Real q = order.q;
  auto integrand = [&](Real u) {
    const Real log_u = std::log(u);
    const Real log_s = std::log(s0) - log_u / q;
    return std::exp(log_coupling_smooth(order, log_s) + (-1.0 / q - 1.0) * log_u);
  };
  auto quad = [&](const std::vector<Real>& x, const std::vector<Real>& w) {
    Real acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Real u = 0.5 * (x[i] + 1.0);  // map [-1,1] -> [0,1]
      acc += w[i] * integrand(u);
    }
    return 0.5 * acc * (s0 / q);
  };
  const Real coarse = quad(x32, w32);
  const Real fine = quad(x64, w64);
  if (err_estimate) *err_estimate = std::abs(fine - coarse);
  return fine;
}

// Certified bound on the Euler-Maclaurin midpoint correction left out of
//   sum_{n >= N} f(n) ~ integral_{N - 1/2}^{inf} f(x) dx
// for f(x) = J(rho + x L), decreasing and convex in the tail. Uses
// |d log J / ds| <= (2 + q) / (s - 1), from psi(s + 1 + q/2) - psi(s - q/2)
// bounded through ln x - 1/x < psi(x) < ln x - 1/(2x).
Real midpoint_bound(const FractionalOrder& order, Real L, Real s_half) {
  const Real j = coupling_smooth(order, s_half);
  const Real rate = (2.0 + order.q) / (s_half - 1.0);
  const Real fp = L * j * rate;                  // |f'| at the cut
  const Real fpp = L * L * j * rate * rate * 2.0;  // crude |f''| envelope
  return (fp + fpp) / 24.0;
}

struct ImageSums {
  ArrayXr values;  // S(rho), rho = 1..L at values[rho-1]
  ArrayXr bounds;  // certified truncation bound per entry
};

// S(rho) = sum_{n >= 0} J(rho + n L) for every residue class rho = 1..L,
// each entry accurate to `tolerance`. One shared coupling table feeds all
// classes; the tail beyond it is closed by quadrature plus a certified
// midpoint bound.
ImageSums image_sums(const FractionalOrder& order, long L, Real tolerance) {
  if (L < 1) throw std::invalid_argument("image sums need L >= 1");
  if (tolerance <= 0.0) throw std::invalid_argument("tail tolerance must be positive");
  order.require_simulable();

  ImageSums out;
  out.values = ArrayXr::Zero(L);
  out.bounds = ArrayXr::Zero(L);

  if (order.q == 2.0) {  // only J(1) = 1 survives
    out.values[0] = 1.0;
    return out;
  }

  // Grow the explicit part until the certified remainder fits the budget,
  // splitting it evenly between the midpoint bound and quadrature noise.
  long n_terms = 64;
  Real bound = 0.0;
  for (;;) {
    const Real s_half = 1.0 + (static_cast<Real>(n_terms) - 0.5) * L;
    bound = midpoint_bound(order, static_cast<Real>(L), s_half);
    if (2.0 * bound <= 0.5 * tolerance || n_terms > (1L << 24)) break;
    n_terms *= 2;
  }
  if (2.0 * bound > 0.5 * tolerance)
    throw std::runtime_error("image sum tail cannot reach requested tolerance");

  const long r_max = L * n_terms;  // covers rho + n L for rho <= L, n < n_terms
  const CouplingTable table = build_table(order, r_max);

  for (long rho = 1; rho <= L; ++rho) {
    long double acc = 0.0L;
    for (long n = n_terms - 1; n >= 0; --n) acc += table.at(rho + n * L);
    const Real s_half = rho + (static_cast<Real>(n_terms) - 0.5) * L;
    Real quad_err = 0.0;
    const Real tail = tail_integral(order, s_half, &quad_err) / L;
    out.values[rho - 1] = static_cast<Real>(acc) + tail;
    out.bounds[rho - 1] =
        midpoint_bound(order, static_cast<Real>(L), s_half) + 2.0 * quad_err;
  }
  return out;
}

}  // namespace

FractionalOrder::FractionalOrder(Real q_) : q(q_) {
  if (!(q_ > 0.0)) throw std::invalid_argument("fractional order must satisfy q > 0");
  if (!std::isfinite(q_)) throw std::invalid_argument("fractional order must be finite");
}

void FractionalOrder::require_simulable() const {
  if (q > 2.0)
    throw std::invalid_argument(
        "q = " + std::to_string(q) +
        " is outside the simulable range; interactions stay ferromagnetic only for q <= 2");
}

Real generalized_binomial(Real q, Real x) {
  const SignedLogGamma num = lgamma_signed(q + 1.0);
  if (num.pole) throw std::domain_error("generalized binomial undefined at q <= -1 integer");
  const SignedLogGamma d1 = lgamma_signed(x + 1.0);
  const SignedLogGamma d2 = lgamma_signed(q - x + 1.0);
  if (d1.pole || d2.pole) return 0.0;  // denominator Gamma pole kills the coefficient
  const Real log_mag = num.log_abs - d1.log_abs - d2.log_abs;
  const int sign = num.sign * d1.sign * d2.sign;
  return sign * std::exp(log_mag);
}

Real coupling(const FractionalOrder& order, long r) {
  if (r < 1) throw std::invalid_argument("coupling defined for separations r >= 1");
  const Real value = generalized_binomial(order.q, order.q / 2.0 + static_cast<Real>(r));
  return (r % 2 == 1) ? value : -value;
}

Real coupling_smooth(const FractionalOrder& order, Real s) {
  if (!(s >= 1.0)) throw std::invalid_argument("coupling_smooth needs s >= 1");
  // (-1)^(r+1) binom(q, q/2 + r) recast by Gamma reflection into a form with
  // no sign alternation, valid for real separations:
  //   J(s) = Gamma(q+1) sin(pi q / 2) / pi * Gamma(s - q/2) / Gamma(s + 1 + q/2)
  if (order.q == 2.0) return s == 1.0 ? 1.0 : 0.0;
  return std::exp(log_coupling_smooth(order, std::log(s)));
}

CouplingTable build_table(const FractionalOrder& order, long r_max) {
  if (r_max < 1) throw std::invalid_argument("coupling table needs r_max >= 1");
  ArrayXr values(r_max);
  values[0] = coupling(order, 1);
  const Real q = order.q;
  // J(r+1)/J(r) = (r - q/2) / (r + 1 + q/2), exact from the Gamma form; keeps
  // long tables free of alternating-sign cancellation.
  for (long r = 1; r < r_max; ++r) {
    const Real ratio = (static_cast<Real>(r) - q / 2.0) / (static_cast<Real>(r) + 1.0 + q / 2.0);
    values[r] = values[r - 1] * ratio;
  }
  return CouplingTable{order, std::move(values), generalized_binomial(q, q / 2.0)};
}

PeriodicCouplingTable periodic_table(const CouplingTable& base, long L, Real tail_tolerance) {
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("ring size must be even and >= 2");
  base.order.require_simulable();

  PeriodicCouplingTable out{base.order, L, ArrayXr(), ArrayXr(), tail_tolerance};
  out.values = ring_couplings(base.order, L, tail_tolerance, &out.tail_bounds);
  return out;
}

ArrayXr ring_couplings(const FractionalOrder& order, long L, Real tail_tolerance,
                       ArrayXr* bounds_out) {
  if (L < 1) throw std::invalid_argument("ring size must be >= 1");
  order.require_simulable();
  const long n = L / 2;
  ArrayXr values = ArrayXr::Zero(n);
  ArrayXr bounds = ArrayXr::Zero(n);
  if (n > 0) {
    // Each distance combines two residue classes (the same one twice at the
    // even-L half-way point), so ask for half the budget per class.
    const ImageSums sums = image_sums(order, L, tail_tolerance / 2.0);
    for (long r = 1; r <= n; ++r) {
      values[r - 1] = sums.values[r - 1] + sums.values[L - r - 1];
      bounds[r - 1] = sums.bounds[r - 1] + sums.bounds[L - r - 1];
      if (bounds[r - 1] > tail_tolerance)
        throw std::runtime_error("periodized coupling tail bound exceeds tolerance");
    }
  }
  if (bounds_out) *bounds_out = std::move(bounds);
  return values;
}

Real momentum_coupling(const FractionalOrder& order, Real k) {
  return std::pow(std::abs(2.0 * std::sin(k / 2.0)), order.q);
}

Real one_sided_image_sum(const FractionalOrder& order, long L, long rho, Real tolerance,
                         Real* bound_out) {
  if (rho < 1 || rho > L) throw std::invalid_argument("residue class must lie in [1, L]");
  const ImageSums sums = image_sums(order, L, tolerance);
  if (bound_out) *bound_out = sums.bounds[rho - 1];
  return sums.values[rho - 1];
}

Real coupling_sum(const FractionalOrder& order, Real tolerance, Real* bound_out) {
  // sum_{r >= 1} J(r) is the single residue class of a ring of size one.
  return one_sided_image_sum(order, 1, 1, tolerance, bound_out);
}

ArrayXr spectral_identity_residuals(const FractionalOrder& order, long L, Real tolerance) {
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("k-grid needs even L >= 2");
  // cos(k_m (rho + n L)) = cos(k_m rho) on the commensurate grid, so the full
  // lattice sum collapses onto residue classes:
  //   sum_{r >= 1} J(r) cos(k_m r) = sum_{rho = 1}^{L} cos(k_m rho) S(rho).
  const ImageSums sums = image_sums(order, L, tolerance / (4.0 * static_cast<Real>(L)));
  const Real central = generalized_binomial(order.q, order.q / 2.0);
  ArrayXr residuals(L / 2 + 1);
  for (long m = 0; m <= L / 2; ++m) {
    const Real k = 2.0 * kPi * static_cast<Real>(m) / static_cast<Real>(L);
    long double lattice = 0.0L;
    for (long rho = 1; rho <= L; ++rho)
      lattice += std::cos(k * static_cast<Real>(rho)) * static_cast<long double>(sums.values[rho - 1]);
    residuals[m] = central - 2.0 * static_cast<Real>(lattice) - momentum_coupling(order, k);
  }
  return residuals;
}

LogLogFit fit_log_log(const CouplingTable& table, long r_lo, long r_hi) {
  if (r_lo < 1 || r_hi > table.r_max() || r_lo >= r_hi)
    throw std::invalid_argument("log-log window outside table");
  const long n = r_hi - r_lo + 1;
  VectorXr logs(n), logr(n);
  for (long i = 0; i < n; ++i) {
    const Real v = table.at(r_lo + i);
    if (!(v > 0.0)) throw std::domain_error("log-log fit needs strictly positive couplings");
    logs[i] = std::log(v);
    logr[i] = std::log(static_cast<Real>(r_lo + i));
  }
  MatrixXr X(n, 2);
  X.col(0) = logr;
  X.col(1).setOnes();
  const Eigen::Vector2d beta = (X.transpose() * X).ldlt().solve(X.transpose() * logs);
  const VectorXr resid = logs - X * beta;
  LogLogFit fit;
  fit.slope = beta[0];
  fit.intercept = beta[1];
  fit.n_points = n;
  if (n > 2) {
    const Real sigma2 = resid.squaredNorm() / static_cast<Real>(n - 2);
    const Real sxx = (logr.array() - logr.mean()).square().sum();
    fit.slope_stderr = std::sqrt(sigma2 / sxx);
  }
  return fit;
}

Real asymptotic_exponent(const CouplingTable& table, long r_lo, long r_hi) {
  return fit_log_log(table, r_lo, r_hi).slope;
}

ResidualSeries residual_subleading(const CouplingTable& table, long r_lo, long r_hi) {
  if (r_lo < 1 || r_hi > table.r_max() || r_lo >= r_hi)
    throw std::invalid_argument("residual window outside table");
  const Real q = table.order.q;
  // Leading amplitude from the top half-decade of the table, far from the
  // fit window, so the subtraction error there is O(r_tail^-2) relative.
  const long tail_hi = table.r_max();
  const long tail_lo = std::max(r_hi + 1, static_cast<long>(tail_hi / std::sqrt(10.0)));
  if (tail_lo >= tail_hi)
    throw std::invalid_argument("table too short to calibrate leading amplitude");
  long double log_acc = 0.0L;
  long count = 0;
  for (long r = tail_lo; r <= tail_hi; ++r) {
    const Real v = table.at(r);
    if (!(v > 0.0)) throw std::domain_error("amplitude calibration needs positive couplings");
    log_acc += std::log(v) + (1.0 + q) * std::log(static_cast<Real>(r));
    ++count;
  }
  const Real amplitude = std::exp(static_cast<Real>(log_acc / count));

  ResidualSeries series;
  const long n = r_hi - r_lo + 1;
  series.r = ArrayXr(n);
  series.residual = ArrayXr(n);
  series.amplitude = amplitude;
  for (long i = 0; i < n; ++i) {
    const long r = r_lo + i;
    series.r[i] = static_cast<Real>(r);
    series.residual[i] = table.at(r) - amplitude * std::pow(static_cast<Real>(r), -(1.0 + q));
  }
  return series;
}

LogLogFit fit_residual_slope(const ResidualSeries& series) {
  const long n = series.r.size();
  if (n < 2) throw std::invalid_argument("residual fit needs at least two points");
  VectorXr logs(n), logr(n);
  for (long i = 0; i < n; ++i) {
    if (!(series.residual[i] > 0.0))
      throw std::domain_error("residual fit needs strictly positive residuals");
    logs[i] = std::log(series.residual[i]);
    logr[i] = std::log(series.r[i]);
  }
  MatrixXr X(n, 2);
  X.col(0) = logr;
  X.col(1).setOnes();
  const Eigen::Vector2d beta = (X.transpose() * X).ldlt().solve(X.transpose() * logs);
  LogLogFit fit;
  fit.slope = beta[0];
  fit.intercept = beta[1];
  fit.n_points = n;
  if (n > 2) {
    const VectorXr resid = logs - X * beta;
    const Real sigma2 = resid.squaredNorm() / static_cast<Real>(n - 2);
    const Real sxx = (logr.array() - logr.mean()).square().sum();
    fit.slope_stderr = std::sqrt(sigma2 / sxx);
  }
  return fit;
}

}  // namespace fracising::couplings
