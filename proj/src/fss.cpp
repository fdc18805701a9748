#include "fracising/fss.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fracising::fss {

namespace {

struct LineFit {
  Real slope = 0.0;
  Real intercept = 0.0;
  Real slope_err = 0.0;
  Real intercept_err = 0.0;
  Real chi2_reduced = 0.0;
};

// Weighted least squares y = intercept + slope x; zero sigmas fall back to
// unit weights with errors scaled by the residual variance.
LineFit weighted_linear_fit(const ArrayXr& x, const ArrayXr& y, const ArrayXr& sigma) {
  const long n = x.size();
  if (n < 2) throw std::invalid_argument("linear fit needs at least two points");
  const bool weighted = (sigma > 0.0).all();
  ArrayXr w = weighted ? ArrayXr(1.0 / sigma.square()) : ArrayXr(ArrayXr::Ones(n));

  const Real W = w.sum();
  const Real Sx = (w * x).sum();
  const Real Sy = (w * y).sum();
  const Real Sxx = (w * x * x).sum();
  const Real Sxy = (w * x * y).sum();
  const Real D = W * Sxx - Sx * Sx;
  if (!(D > 0.0)) throw std::invalid_argument("degenerate abscissa in linear fit");

  LineFit fit;
  fit.slope = (W * Sxy - Sx * Sy) / D;
  fit.intercept = (Sxx * Sy - Sx * Sxy) / D;
  const ArrayXr res = y - fit.intercept - fit.slope * x;
  const Real chi2 = (w * res.square()).sum();
  fit.chi2_reduced = n > 2 ? chi2 / static_cast<Real>(n - 2) : 0.0;
  const Real scale = weighted ? 1.0 : (n > 2 ? fit.chi2_reduced : 0.0);
  fit.slope_err = std::sqrt(std::max(0.0, (weighted ? W / D : scale * W / D)));
  fit.intercept_err = std::sqrt(std::max(0.0, (weighted ? Sxx / D : scale * Sxx / D)));
  return fit;
}

// ---- simplex minimizer ---------------------------------------------------

using Objective = std::function<Real(const VectorXr&)>;

VectorXr nelder_mead(const Objective& f, const VectorXr& x0, const VectorXr& step, int max_iter,
                     Real ftol, Real* f_best = nullptr) {
  const long dim = x0.size();
  std::vector<VectorXr> xs;
  std::vector<Real> fs;
  xs.push_back(x0);
  for (long i = 0; i < dim; ++i) {
    VectorXr v = x0;
    v[i] += step[i];
    xs.push_back(v);
  }
  for (auto& v : xs) fs.push_back(f(v));

  auto order = [&]() {
    std::vector<std::size_t> idx(xs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<VectorXr> xs2;
    std::vector<Real> fs2;
    for (std::size_t i : idx) {
      xs2.push_back(xs[i]);
      fs2.push_back(fs[i]);
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };

  for (int it = 0; it < max_iter; ++it) {
    order();
    if (std::abs(fs.back() - fs.front()) <= ftol * (1.0 + std::abs(fs.front()))) break;
    VectorXr centroid = VectorXr::Zero(dim);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) centroid += xs[i];
    centroid /= static_cast<Real>(dim);

    const VectorXr reflected = centroid + (centroid - xs.back());
    const Real fr = f(reflected);
    if (fr < fs.front()) {
      const VectorXr expanded = centroid + 2.0 * (centroid - xs.back());
      const Real fe = f(expanded);
      if (fe < fr) {
        xs.back() = expanded;
        fs.back() = fe;
      } else {
        xs.back() = reflected;
        fs.back() = fr;
      }
    } else if (fr < fs[fs.size() - 2]) {
      xs.back() = reflected;
      fs.back() = fr;
    } else {
      const VectorXr contracted = centroid + 0.5 * (xs.back() - centroid);
      const Real fc = f(contracted);
      if (fc < fs.back()) {
        xs.back() = contracted;
        fs.back() = fc;
      } else {
        for (std::size_t i = 1; i < xs.size(); ++i) {
          xs[i] = xs.front() + 0.5 * (xs[i] - xs.front());
          fs[i] = f(xs[i]);
        }
      }
    }
  }
  order();
  if (f_best) *f_best = fs.front();
  return xs.front();
}

Real golden_minimize(const std::function<Real(Real)>& f, Real lo, Real hi, Real tol) {
  const Real inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  Real a = lo, b = hi;
  Real c = b - inv_phi * (b - a);
  Real d = a + inv_phi * (b - a);
  Real fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// ---- local-linear master curve --------------------------------------------

struct RescaledPoint {
  Real x = 0.0;
  Real y = 0.0;
  Real sigma = 0.0;
};

// Mean squared deviation of every point from the line through the two
// nearest-x points of the other sizes, normalized per point by the combined
// variance (unit weights where all sigmas vanish).
Real master_quality(const std::vector<std::vector<RescaledPoint>>& sizes) {
  std::vector<RescaledPoint> others;
  Real total = 0.0;
  long used = 0;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    others.clear();
    for (std::size_t t = 0; t < sizes.size(); ++t)
      if (t != s) others.insert(others.end(), sizes[t].begin(), sizes[t].end());
    if (others.size() < 2) continue;
    // tie-break coincident x so the master curve is permutation-invariant
    std::sort(others.begin(), others.end(), [](const RescaledPoint& a, const RescaledPoint& b) {
      if (a.x != b.x) return a.x < b.x;
      if (a.y != b.y) return a.y < b.y;
      return a.sigma < b.sigma;
    });
    for (const RescaledPoint& p : sizes[s]) {
      if (p.x < others.front().x || p.x > others.back().x) continue;
      auto it = std::lower_bound(others.begin(), others.end(), p.x,
                                 [](const RescaledPoint& a, Real x) { return a.x < x; });
      const RescaledPoint& hi = (it == others.end()) ? others.back() : *it;
      const RescaledPoint& lo = (it == others.begin()) ? others.front() : *(it - 1);
      Real f = 0.0;
      if (hi.x > lo.x) f = (p.x - lo.x) / (hi.x - lo.x);
      const Real m = (1.0 - f) * lo.y + f * hi.y;
      const Real var_m =
          (1.0 - f) * (1.0 - f) * lo.sigma * lo.sigma + f * f * hi.sigma * hi.sigma;
      const Real dev = p.y - m;
      const Real denom = p.sigma * p.sigma + var_m;
      total += denom > 0.0 ? dev * dev / denom : dev * dev;
      ++used;
    }
  }
  if (used == 0)
    throw std::runtime_error("degenerate collapse window: no overlap after rescaling");
  return total / static_cast<Real>(used);
}

ArrayXr curve_controls(const ScalingCurve& c) {
  ArrayXr out(static_cast<long>(c.points.size()));
  for (long i = 0; i < out.size(); ++i) out[i] = c.points[static_cast<std::size_t>(i)].control;
  return out;
}

}  // namespace

// ---- locate_peak ------------------------------------------------------------

namespace {

struct Quadratic {
  Real c0 = 0.0, c1 = 0.0, c2 = 0.0;  // y = c0 + c1 t + c2 t^2 in centered coords
};

Quadratic fit_quadratic(const ArrayXr& t, const ArrayXr& y, const ArrayXr& sigma) {
  const bool weighted = (sigma > 0.0).all();
  ArrayXr w = weighted ? ArrayXr(1.0 / sigma.square()) : ArrayXr(ArrayXr::Ones(t.size()));
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (long i = 0; i < t.size(); ++i) {
    const Eigen::Vector3d phi(1.0, t[i], t[i] * t[i]);
    A += w[i] * phi * phi.transpose();
    b += w[i] * y[i] * phi;
  }
  const Eigen::Vector3d c = A.ldlt().solve(b);
  return {c[0], c[1], c[2]};
}

}  // namespace

PeakEstimate locate_peak(const ScalingCurve& curve, std::uint64_t seed) {
  const long n = static_cast<long>(curve.points.size());
  if (n < 5) throw std::invalid_argument("peak location needs at least five scanned points");

  long idx = 0;
  for (long i = 1; i < n; ++i)
    if (curve.points[static_cast<std::size_t>(i)].value >
        curve.points[static_cast<std::size_t>(idx)].value)
      idx = i;
  if (idx == 0 || idx == n - 1)
    throw std::runtime_error("peak sits at the edge of the scanned window; widen the scan");

  long lo = idx - 3, hi = idx + 3;  // aim for 7 points, keep at least 5
  if (lo < 0) {
    hi = std::min(n - 1, hi - lo);
    lo = 0;
  }
  if (hi > n - 1) {
    lo = std::max<long>(0, lo - (hi - (n - 1)));
    hi = n - 1;
  }
  const long k = hi - lo + 1;

  ArrayXr t(k), y(k), sg(k);
  for (long i = 0; i < k; ++i) {
    const auto& p = curve.points[static_cast<std::size_t>(lo + i)];
    t[i] = p.control;
    y[i] = p.value;
    sg[i] = p.std_error;
  }
  const Real t_mid = t.mean();
  const Real t_scale = std::max(t.maxCoeff() - t.minCoeff(), 1e-300);
  const ArrayXr tc = (t - t_mid) / t_scale;

  auto vertex = [&](const Quadratic& q) -> std::pair<Real, Real> {
    const Real v = -q.c1 / (2.0 * q.c2);
    return {t_mid + t_scale * v, q.c0 - q.c1 * q.c1 / (4.0 * q.c2)};
  };

  const Quadratic q = fit_quadratic(tc, y, sg);
  if (!(q.c2 < 0.0))
    throw std::runtime_error("no downward curvature at the maximum; widen the scan");
  const auto [pos, height] = vertex(q);
  if (pos < t.minCoeff() || pos > t.maxCoeff())
    throw std::runtime_error("fitted vertex left the scanned window; widen the scan");

  PeakEstimate est;
  est.position = pos;
  est.height = height;
  est.n_fit = k;

  if ((sg > 0.0).any()) {
    Rng rng(derive_seed(seed, 1));
    std::vector<Real> positions, heights;
    const int B = 200;
    ArrayXr yb(k);
    for (int b = 0; b < B; ++b) {
      for (long i = 0; i < k; ++i) yb[i] = y[i] + sg[i] * normal01(rng);
      const Quadratic qb = fit_quadratic(tc, yb, sg);
      if (!(qb.c2 < 0.0)) continue;
      const auto [pb, hb] = vertex(qb);
      positions.push_back(pb);
      heights.push_back(hb);
    }
    auto stdev = [](const std::vector<Real>& v) {
      if (v.size() < 2) return 0.0;
      Real mean = 0.0;
      for (Real x : v) mean += x;
      mean /= static_cast<Real>(v.size());
      Real ss = 0.0;
      for (Real x : v) ss += (x - mean) * (x - mean);
      return std::sqrt(ss / static_cast<Real>(v.size() - 1));
    };
    est.position_err = stdev(positions);
    est.height_err = stdev(heights);
  }
  return est;
}

// ---- extrapolate_tc -----------------------------------------------------------

namespace {

struct ShiftFit {
  Real T_c = 0.0, a = 0.0, w = 0.0, ssr = 0.0, max_residual = 0.0;
};

ShiftFit fit_shift_given_w(const ArrayXr& L, const ArrayXr& T, const ArrayXr& sg, Real w) {
  const ArrayXr u = L.pow(-w);
  const LineFit lf = weighted_linear_fit(u, T, sg);
  ShiftFit out;
  out.T_c = lf.intercept;
  out.a = lf.slope;
  out.w = w;
  const ArrayXr res = T - lf.intercept - lf.slope * u;
  const bool weighted = (sg > 0.0).all();
  out.ssr = weighted ? (res / sg).square().sum() : res.square().sum();
  out.max_residual = res.abs().maxCoeff();
  return out;
}

ShiftFit best_shift_fit(const ArrayXr& L, const ArrayXr& T, const ArrayXr& sg, int n_scan) {
  const Real w_lo = 0.02, w_hi = 10.0;
  Real best_w = w_lo;
  Real best_ssr = std::numeric_limits<Real>::infinity();
  for (int i = 0; i < n_scan; ++i) {
    const Real w =
        w_lo * std::pow(w_hi / w_lo, static_cast<Real>(i) / static_cast<Real>(n_scan - 1));
    const Real ssr = fit_shift_given_w(L, T, sg, w).ssr;
    if (ssr < best_ssr) {
      best_ssr = ssr;
      best_w = w;
    }
  }
  const Real step = std::pow(w_hi / w_lo, 1.0 / static_cast<Real>(n_scan - 1));
  const Real lo = best_w / step, hi = best_w * step;
  const Real w_opt = golden_minimize(
      [&](Real w) { return fit_shift_given_w(L, T, sg, w).ssr; }, lo, hi, 1e-13);
  return fit_shift_given_w(L, T, sg, w_opt);
}

}  // namespace

TcExtrapolation extrapolate_tc(const std::vector<PseudoCritical>& points, std::uint64_t seed) {
  const long n = static_cast<long>(points.size());
  if (n < 3)
    throw std::invalid_argument("critical-point extrapolation needs at least three sizes");
  ArrayXr L(n), T(n), sg(n);
  for (long i = 0; i < n; ++i) {
    L[i] = static_cast<Real>(points[static_cast<std::size_t>(i)].L);
    T[i] = points[static_cast<std::size_t>(i)].position;
    sg[i] = points[static_cast<std::size_t>(i)].err;
  }
  const ShiftFit fit = best_shift_fit(L, T, sg, 241);
  if (fit.w < 0.021 || fit.w > 9.9) {
    std::ostringstream msg;
    msg << "shift-exponent fit did not converge (exponent pinned at " << fit.w
        << "); residual " << fit.max_residual;
    throw std::runtime_error(msg.str());
  }

  TcExtrapolation out;
  out.T_c = fit.T_c;
  out.inv_nu = fit.w;
  out.amplitude = fit.a;
  out.max_residual = fit.max_residual;

  if ((sg > 0.0).any()) {
    Rng rng(derive_seed(seed, 1));
    std::vector<Real> tcs, ws;
    const int B = 300;
    ArrayXr Tb(n);
    for (int b = 0; b < B; ++b) {
      for (long i = 0; i < n; ++i) Tb[i] = T[i] + sg[i] * normal01(rng);
      try {
        const ShiftFit fb = best_shift_fit(L, Tb, sg, 61);
        tcs.push_back(fb.T_c);
        ws.push_back(fb.w);
      } catch (const std::exception&) {
      }
    }
    auto stdev = [](const std::vector<Real>& v) {
      if (v.size() < 2) return 0.0;
      Real mean = 0.0;
      for (Real x : v) mean += x;
      mean /= static_cast<Real>(v.size());
      Real ss = 0.0;
      for (Real x : v) ss += (x - mean) * (x - mean);
      return std::sqrt(ss / static_cast<Real>(v.size() - 1));
    };
    out.T_c_err = stdev(tcs);
    out.inv_nu_err = stdev(ws);
  }
  return out;
}

// ---- binder_crossing -------------------------------------------------------------

namespace {

// Linear interpolation of a curve at control t (t inside the curve's range).
std::pair<Real, Real> interp_curve(const ScalingCurve& c, Real t) {
  const auto& pts = c.points;
  std::size_t j = 1;
  while (j + 1 < pts.size() && pts[j].control < t) ++j;
  const auto& a = pts[j - 1];
  const auto& b = pts[j];
  Real f = 0.0;
  if (b.control > a.control) f = (t - a.control) / (b.control - a.control);
  const Real v = (1.0 - f) * a.value + f * b.value;
  const Real var = (1.0 - f) * (1.0 - f) * a.std_error * a.std_error +
                   f * f * b.std_error * b.std_error;
  return {v, std::sqrt(var)};
}

}  // namespace

CrossingResult binder_crossing(const std::vector<ScalingCurve>& curves) {
  if (curves.size() < 2)
    throw std::invalid_argument("crossing analysis needs at least two sizes");
  for (const auto& c : curves)
    if (c.points.size() < 2)
      throw std::invalid_argument("crossing analysis needs at least two points per curve");

  std::vector<std::size_t> order(curves.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return curves[a].L < curves[b].L; });

  CrossingResult out;
  long n_pairs = 0;
  for (std::size_t ia = 0; ia < order.size(); ++ia) {
    for (std::size_t ib = ia + 1; ib < order.size(); ++ib) {
      const ScalingCurve& A = curves[order[ia]];
      const ScalingCurve& B = curves[order[ib]];
      ++n_pairs;
      const Real lo = std::max(A.points.front().control, B.points.front().control);
      const Real hi = std::min(A.points.back().control, B.points.back().control);
      if (!(hi > lo)) continue;

      std::vector<Real> ts, Ds, sgs;
      for (const auto& p : A.points) {
        if (p.control < lo || p.control > hi) continue;
        const auto [vb, sb] = interp_curve(B, p.control);
        ts.push_back(p.control);
        Ds.push_back(p.value - vb);
        sgs.push_back(std::sqrt(p.std_error * p.std_error + sb * sb));
      }
      if (ts.size() < 2) continue;

      // the pair counts only when the curves separate significantly on both
      // sides; near-degenerate curves (no transition) never qualify
      const bool ends_split = Ds.front() * Ds.back() < 0.0 &&
                              std::abs(Ds.front()) > 2.0 * sgs.front() &&
                              std::abs(Ds.back()) > 2.0 * sgs.back();
      if (!ends_split) continue;

      std::vector<std::size_t> flips;
      for (std::size_t k = 0; k + 1 < Ds.size(); ++k)
        if (Ds[k] * Ds[k + 1] <= 0.0 && (Ds[k] != 0.0 || Ds[k + 1] != 0.0)) flips.push_back(k);
      if (flips.empty()) continue;
      const std::size_t k = flips[flips.size() / 2];

      const Real span = ts[k + 1] - ts[k];
      const Real dD = Ds[k] - Ds[k + 1];
      PairCrossing pc;
      pc.L_small = A.L;
      pc.L_large = B.L;
      pc.control = ts[k] + (dD != 0.0 ? Ds[k] * span / dD : 0.5 * span);
      pc.err = dD != 0.0 ? std::abs(span / dD) * std::max(sgs[k], sgs[k + 1])
                         : 0.5 * span;
      out.crossings.push_back(pc);
    }
  }

  if (out.crossings.empty() || 2 * static_cast<long>(out.crossings.size()) < n_pairs) {
    out.transition = false;
    out.note = "no transition detected";
    return out;
  }

  out.transition = true;
  const long m = static_cast<long>(out.crossings.size());
  if (m >= 3) {
    ArrayXr x(m), y(m), sg(m);
    for (long i = 0; i < m; ++i) {
      const auto& pc = out.crossings[static_cast<std::size_t>(i)];
      const Real l_harm = 2.0 * static_cast<Real>(pc.L_small) * static_cast<Real>(pc.L_large) /
                          static_cast<Real>(pc.L_small + pc.L_large);
      x[i] = 1.0 / l_harm;
      y[i] = pc.control;
      sg[i] = pc.err;
    }
    const LineFit lf = weighted_linear_fit(x, y, sg);
    out.T_c = lf.intercept;
    out.T_c_err = lf.intercept_err;
  } else {
    Real wsum = 0.0, vsum = 0.0;
    Real lo = out.crossings.front().control, hi = lo;
    for (const auto& pc : out.crossings) {
      const Real w = pc.err > 0.0 ? 1.0 / (pc.err * pc.err) : 1.0;
      wsum += w;
      vsum += w * pc.control;
      lo = std::min(lo, pc.control);
      hi = std::max(hi, pc.control);
    }
    out.T_c = vsum / wsum;
    out.T_c_err = std::sqrt(1.0 / wsum + 0.25 * (hi - lo) * (hi - lo));
  }
  return out;
}

// ---- collapse ---------------------------------------------------------------------

namespace {

std::vector<std::vector<RescaledPoint>> rescale_curves(const std::vector<ScalingCurve>& curves,
                                                       const CollapseParams& params, Real kappa) {
  if (!(params.control_c > 0.0))
    throw std::invalid_argument("collapse needs a positive critical control value");
  std::vector<std::vector<RescaledPoint>> out;
  for (const auto& c : curves) {
    const Real Lr = static_cast<Real>(c.L);
    const Real xfac = std::pow(Lr, kappa * params.inv_nu);
    const Real yfac = std::pow(Lr, -kappa * params.ratio);
    std::vector<RescaledPoint> pts;
    pts.reserve(c.points.size());
    for (const auto& p : c.points) {
      RescaledPoint rp;
      rp.x = xfac * (p.control - params.control_c) / params.control_c;
      rp.y = p.value * yfac;
      rp.sigma = p.std_error * yfac;
      pts.push_back(rp);
    }
    std::sort(pts.begin(), pts.end(),
              [](const RescaledPoint& a, const RescaledPoint& b) { return a.x < b.x; });
    out.push_back(std::move(pts));
  }
  return out;
}

}  // namespace

Real collapse_quality(const std::vector<ScalingCurve>& curves, const CollapseParams& params,
                      Real kappa) {
  if (curves.size() < 2) throw std::invalid_argument("collapse needs at least two sizes");
  if (!(kappa >= 1.0)) throw std::invalid_argument("kappa must be >= 1");
  return master_quality(rescale_curves(curves, params, kappa));
}

CollapseResult optimize_collapse(const std::vector<ScalingCurve>& curves,
                                 const CollapseOptions& options) {
  if (curves.size() < 3) throw std::invalid_argument("collapse analysis needs at least 3 sizes");

  Real lo = options.control_lo, hi = options.control_hi;
  if (!(hi > lo)) {  // derive the search window from the shared control range
    lo = -std::numeric_limits<Real>::infinity();
    hi = std::numeric_limits<Real>::infinity();
    for (const auto& c : curves) {
      const ArrayXr t = curve_controls(c);
      lo = std::max(lo, t.minCoeff());
      hi = std::min(hi, t.maxCoeff());
    }
    if (!(hi > lo)) {
      lo = std::numeric_limits<Real>::infinity();
      hi = -std::numeric_limits<Real>::infinity();
      for (const auto& c : curves) {
        const ArrayXr t = curve_controls(c);
        lo = std::min(lo, t.minCoeff());
        hi = std::max(hi, t.maxCoeff());
      }
    }
  }

  const Real span_c = hi - lo;
  const Real span_nu = options.inv_nu_hi - options.inv_nu_lo;
  const Real span_r = options.ratio_hi - options.ratio_lo;

  auto objective = [&](const VectorXr& v) -> Real {
    CollapseParams p{v[0], v[1], v[2]};
    Real penalty = 0.0;
    auto clampit = [&](Real& x, Real a, Real b) {
      if (x < a) {
        penalty += (a - x) * (a - x);
        x = a;
      } else if (x > b) {
        penalty += (x - b) * (x - b);
        x = b;
      }
    };
    clampit(p.control_c, lo + 1e-9 * span_c, hi - 1e-9 * span_c);
    clampit(p.inv_nu, options.inv_nu_lo, options.inv_nu_hi);
    clampit(p.ratio, options.ratio_lo, options.ratio_hi);
    try {
      return collapse_quality(curves, p, options.kappa) + 1e4 * penalty;
    } catch (const std::runtime_error&) {
      return 1e9 + 1e4 * penalty;
    }
  };

  VectorXr best = VectorXr::Zero(3);
  Real best_S = std::numeric_limits<Real>::infinity();
  const int n_restarts = std::max(1, options.n_restarts);
  for (int i = 0; i < n_restarts; ++i) {
    VectorXr x0(3);
    x0[0] = lo + span_c * (static_cast<Real>(i % 5) + 0.5) / 5.0;
    x0[1] = options.inv_nu_lo + span_nu * (static_cast<Real>((i / 5) % 2) + 0.5) / 2.0;
    x0[2] = options.ratio_lo + span_r * (static_cast<Real>((i / 10) % 2) + 0.5) / 2.0;
    VectorXr step(3);
    step << 0.1 * span_c, 0.15 * span_nu, 0.15 * span_r;
    Real S = 0.0;
    const VectorXr x = nelder_mead(objective, x0, step, 400, 1e-12, &S);
    const bool tie = std::abs(S - best_S) <= 1e-6 * std::max(1.0, best_S);
    if ((tie && std::abs(x[1]) < std::abs(best[1])) || (!tie && S < best_S)) {
      best = x;
      best_S = S;
    }
  }
  {
    VectorXr step(3);
    step << 0.005 * span_c, 0.01 * span_nu, 0.01 * span_r;
    Real S = 0.0;
    const VectorXr x = nelder_mead(objective, best, step, 400, 1e-13, &S);
    if (S <= best_S) {
      best = x;
      best_S = S;
    }
  }

  CollapseResult out;
  out.params = {best[0], best[1], best[2]};
  out.S = best_S;

  bool any_err = false;
  for (const auto& c : curves)
    for (const auto& p : c.points)
      if (p.std_error > 0.0) any_err = true;
  if (any_err && options.n_bootstrap > 1) {
    Rng rng(derive_seed(options.seed, 2));
    std::vector<Real> tc, nu, ra;
    for (int b = 0; b < options.n_bootstrap; ++b) {
      std::vector<ScalingCurve> perturbed = curves;
      for (auto& c : perturbed)
        for (auto& p : c.points) p.value += p.std_error * normal01(rng);
      auto obj_b = [&](const VectorXr& v) -> Real {
        CollapseParams p{v[0], v[1], v[2]};
        try {
          return collapse_quality(perturbed, p, options.kappa);
        } catch (const std::runtime_error&) {
          return 1e9;
        }
      };
      VectorXr step(3);
      step << 0.01 * span_c, 0.02 * span_nu, 0.02 * span_r;
      const VectorXr x = nelder_mead(obj_b, best, step, 250, 1e-11);
      tc.push_back(x[0]);
      nu.push_back(x[1]);
      ra.push_back(x[2]);
    }
    auto stdev = [](const std::vector<Real>& v) {
      Real mean = 0.0;
      for (Real x : v) mean += x;
      mean /= static_cast<Real>(v.size());
      Real ss = 0.0;
      for (Real x : v) ss += (x - mean) * (x - mean);
      return std::sqrt(ss / static_cast<Real>(v.size() - 1));
    };
    out.control_c_err = stdev(tc);
    out.inv_nu_err = stdev(nu);
    out.ratio_err = stdev(ra);
  }
  return out;
}

// ---- exponents from peak heights -----------------------------------------------

ExponentEstimate exponent_from_peaks(const std::vector<PeakScalingPoint>& points,
                                     const std::string& name, Real kappa) {
  if (points.size() < 3)
    throw std::invalid_argument("peak-height scaling needs at least three sizes");
  if (!(kappa >= 1.0)) throw std::invalid_argument("kappa must be >= 1");
  const long n = static_cast<long>(points.size());
  ArrayXr x(n), y(n), sg(n);
  for (long i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    if (!(p.height > 0.0))
      throw std::invalid_argument("peak heights must be positive for log-log scaling");
    x[i] = std::log(static_cast<Real>(p.L));
    y[i] = std::log(p.height);
    sg[i] = p.err / p.height;
  }
  const LineFit lf = weighted_linear_fit(x, y, sg);
  long L_lo = points.front().L, L_hi = points.front().L;
  for (const auto& p : points) {
    L_lo = std::min(L_lo, p.L);
    L_hi = std::max(L_hi, p.L);
  }
  ExponentEstimate out;
  out.name = name;
  out.value = lf.slope / kappa;  // de-rescaled bare ratio
  out.std_error = lf.slope_err / kappa;
  out.window_lo = static_cast<Real>(L_lo);
  out.window_hi = static_cast<Real>(L_hi);
  out.quality = lf.chi2_reduced;
  return out;
}

// ---- extract_eta ------------------------------------------------------------------

ExponentEstimate extract_eta(const std::vector<CorrelationData>& data, int d,
                             std::uint64_t seed) {
  if (d != 1 && d != 2) throw std::invalid_argument("dimension must be 1 or 2");

  struct LogPoints {
    Real logL = 0.0;
    std::vector<Real> u, v, sg;  // ln r, ln G, relative error
  };
  std::vector<LogPoints> sizes;
  Real window_hi = 0.0;
  for (const auto& c : data) {
    LogPoints lp;
    lp.logL = std::log(static_cast<Real>(c.L));
    const Real r_hi = static_cast<Real>(c.L) / 4.0;
    for (long i = 0; i < c.r.size(); ++i) {
      if (c.r[i] < 2.0 || c.r[i] > r_hi) continue;
      if (!(c.G[i] > 0.0)) continue;
      lp.u.push_back(std::log(c.r[i]));
      lp.v.push_back(std::log(c.G[i]));
      lp.sg.push_back(c.err.size() > i ? c.err[i] / c.G[i] : 0.0);
      window_hi = std::max(window_hi, r_hi);
    }
    if (lp.u.size() >= 2) sizes.push_back(std::move(lp));
  }
  if (sizes.size() < 2)
    throw std::runtime_error("correlation fit window too small: need 2 <= r <= L/4 on at "
                             "least two sizes");

  auto quality_at = [&](Real p, const std::vector<LogPoints>& S) -> Real {
    std::vector<std::vector<RescaledPoint>> rs;
    rs.reserve(S.size());
    for (const auto& lp : S) {
      std::vector<RescaledPoint> pts;
      pts.reserve(lp.u.size());
      for (std::size_t i = 0; i < lp.u.size(); ++i)
        pts.push_back({lp.u[i] - lp.logL, lp.v[i] + p * lp.logL, lp.sg[i]});
      rs.push_back(std::move(pts));
    }
    try {
      return master_quality(rs);
    } catch (const std::runtime_error&) {
      return 1e9;
    }
  };

  const Real p_lo = -0.5, p_hi = 4.0;
  auto solve = [&](const std::vector<LogPoints>& S) -> Real {
    Real best_p = p_lo, best_q = std::numeric_limits<Real>::infinity();
    const int n_scan = 181;
    for (int i = 0; i < n_scan; ++i) {
      const Real p = p_lo + (p_hi - p_lo) * static_cast<Real>(i) / static_cast<Real>(n_scan - 1);
      const Real q = quality_at(p, S);
      if (q < best_q) {
        best_q = q;
        best_p = p;
      }
    }
    const Real grid = (p_hi - p_lo) / static_cast<Real>(n_scan - 1);
    return golden_minimize([&](Real p) { return quality_at(p, S); },
                           best_p - grid, best_p + grid, 1e-12);
  };

  const Real p_opt = solve(sizes);
  if (p_opt < p_lo + 0.01 || p_opt > p_hi - 0.01)
    throw std::runtime_error("correlation decay exponent pinned at the search boundary");

  ExponentEstimate out;
  out.name = "eta";
  out.value = p_opt - static_cast<Real>(d - 2);
  out.window_lo = 2.0;
  out.window_hi = window_hi;
  out.quality = quality_at(p_opt, sizes);

  bool any_err = false;
  for (const auto& lp : sizes)
    for (Real s : lp.sg)
      if (s > 0.0) any_err = true;
  if (any_err) {
    Rng rng(derive_seed(seed, 3));
    std::vector<Real> ps;
    const int B = 120;
    for (int b = 0; b < B; ++b) {
      std::vector<LogPoints> pert = sizes;
      for (auto& lp : pert)
        for (std::size_t i = 0; i < lp.v.size(); ++i) lp.v[i] += lp.sg[i] * normal01(rng);
      ps.push_back(solve(pert));
    }
    Real mean = 0.0;
    for (Real p : ps) mean += p;
    mean /= static_cast<Real>(ps.size());
    Real ss = 0.0;
    for (Real p : ps) ss += (p - mean) * (p - mean);
    out.std_error = std::sqrt(ss / static_cast<Real>(ps.size() - 1));
  }
  return out;
}

// ---- extract_delta ------------------------------------------------------------------

DeltaResult extract_delta(const std::vector<ScalingCurve>& curves_m_of_h,
                          const DeltaOptions& options) {
  if (curves_m_of_h.size() < 3)
    throw std::invalid_argument("isotherm analysis needs at least three sizes");

  struct HPoints {
    Real logL = 0.0;
    std::vector<Real> logh, M, err;
  };
  std::vector<HPoints> sizes;
  Real h_min = std::numeric_limits<Real>::infinity(), h_max = 0.0;
  for (const auto& c : curves_m_of_h) {
    HPoints hp;
    hp.logL = std::log(static_cast<Real>(c.L));
    for (const auto& p : c.points) {
      if (!(p.control > 0.0)) continue;  // zero-field column carries no isotherm signal
      hp.logh.push_back(std::log(p.control));
      hp.M.push_back(p.value);
      hp.err.push_back(p.std_error);
      h_min = std::min(h_min, p.control);
      h_max = std::max(h_max, p.control);
    }
    if (hp.logh.size() < 2)
      throw std::invalid_argument("isotherm analysis needs an h > 0 grid, not just the "
                                  "zero-field column");
    sizes.push_back(std::move(hp));
  }

  const Real kappa = options.kappa;
  auto quality_at = [&](Real a, Real b, const std::vector<HPoints>& S) -> Real {
    std::vector<std::vector<RescaledPoint>> rs;
    rs.reserve(S.size());
    for (const auto& hp : S) {
      const Real yfac = std::exp(kappa * a * hp.logL);
      std::vector<RescaledPoint> pts;
      pts.reserve(hp.logh.size());
      for (std::size_t i = 0; i < hp.logh.size(); ++i)
        pts.push_back({hp.logh[i] + kappa * b * hp.logL, hp.M[i] * yfac, hp.err[i] * yfac});
      std::sort(pts.begin(), pts.end(),
                [](const RescaledPoint& p1, const RescaledPoint& p2) { return p1.x < p2.x; });
      rs.push_back(std::move(pts));
    }
    try {
      return master_quality(rs);
    } catch (const std::runtime_error&) {
      return 1e9;
    }
  };

  const Real a_lo = 0.01, a_hi = 1.5, b_lo = 0.2, b_hi = 4.0;
  auto solve = [&](const std::vector<HPoints>& S, const VectorXr* start) -> std::pair<VectorXr, Real> {
    auto objective = [&](const VectorXr& v) -> Real {
      Real a = v[0], b = v[1], penalty = 0.0;
      auto clampit = [&](Real& x, Real low, Real high) {
        if (x < low) {
          penalty += (low - x) * (low - x);
          x = low;
        } else if (x > high) {
          penalty += (x - high) * (x - high);
          x = high;
        }
      };
      clampit(a, a_lo, a_hi);
      clampit(b, b_lo, b_hi);
      return quality_at(a, b, S) + 1e4 * penalty;
    };
    VectorXr best = VectorXr::Zero(2);
    Real best_S = std::numeric_limits<Real>::infinity();
    if (start) {
      VectorXr step(2);
      step << 0.02, 0.05;
      best = nelder_mead(objective, *start, step, 250, 1e-11, &best_S);
      return {best, best_S};
    }
    const int n = std::max(1, options.n_restarts);
    for (int i = 0; i < n; ++i) {
      VectorXr x0(2);
      x0[0] = a_lo + (a_hi - a_lo) * (static_cast<Real>(i % 4) + 0.5) / 4.0;
      x0[1] = b_lo + (b_hi - b_lo) * (static_cast<Real>((i / 4) % 3) + 0.5) / 3.0;
      VectorXr step(2);
      step << 0.1 * (a_hi - a_lo), 0.1 * (b_hi - b_lo);
      Real S = 0.0;
      const VectorXr x = nelder_mead(objective, x0, step, 350, 1e-12, &S);
      if (S < best_S) {
        best_S = S;
        best = x;
      }
    }
    return {best, best_S};
  };

  const auto [best, best_S] = solve(sizes, nullptr);
  if (best_S >= 1e8)
    throw std::runtime_error("no crossover found in the h window: curves never overlap");
  const Real a = std::clamp(best[0], a_lo, a_hi);
  const Real b = std::clamp(best[1], b_lo, b_hi);
  if (a <= a_lo + 1e-6)
    throw std::runtime_error("degenerate amplitude power in isotherm collapse");

  DeltaResult out;
  out.beta_over_nu = a;
  out.field_power = b;
  out.S = best_S;
  out.form = options.literal_field_form ? "literal" : "gap";
  out.delta.name = "delta";
  out.delta.value = options.literal_field_form ? b * options.nu : b / a;
  out.delta.window_lo = h_min;
  out.delta.window_hi = h_max;
  out.delta.quality = best_S;

  bool any_err = false;
  for (const auto& hp : sizes)
    for (Real e : hp.err)
      if (e > 0.0) any_err = true;
  if (any_err && options.n_bootstrap > 1) {
    Rng rng(derive_seed(options.seed, 4));
    std::vector<Real> ds;
    for (int k = 0; k < options.n_bootstrap; ++k) {
      std::vector<HPoints> pert = sizes;
      for (auto& hp : pert)
        for (std::size_t i = 0; i < hp.M.size(); ++i) hp.M[i] += hp.err[i] * normal01(rng);
      const auto [xb, Sb] = solve(pert, &best);
      const Real ab = std::clamp(xb[0], a_lo, a_hi);
      const Real bb = std::clamp(xb[1], b_lo, b_hi);
      if (ab > a_lo + 1e-6)
        ds.push_back(options.literal_field_form ? bb * options.nu : bb / ab);
    }
    if (ds.size() >= 2) {
      Real mean = 0.0;
      for (Real x : ds) mean += x;
      mean /= static_cast<Real>(ds.size());
      Real ss = 0.0;
      for (Real x : ds) ss += (x - mean) * (x - mean);
      out.delta.std_error = std::sqrt(ss / static_cast<Real>(ds.size() - 1));
    }
  }
  return out;
}

// ---- corrections above the upper critical dimension -----------------------------------

Real kappa_exponent(int d, const couplings::FractionalOrder& order) {
  if (d != 1 && d != 2) throw std::invalid_argument("dimension must be 1 or 2");
  const Real du = 2.0 * order.q;  // upper critical dimension of the long-range model
  return du < static_cast<Real>(d) ? static_cast<Real>(d) / du : 1.0;
}

Real qfss_rescale(Real ratio, Real kappa) {
  if (!(kappa >= 1.0)) throw std::invalid_argument("kappa must be >= 1");
  return ratio * kappa;
}

Real hyperscaling_alpha(int d, Real nu, Real kappa) {
  if (!(kappa >= 1.0)) throw std::invalid_argument("kappa must be >= 1");
  return 2.0 - (static_cast<Real>(d) / kappa) * nu;
}

// ---- Hausdorff report -------------------------------------------------------------------

HausdorffReport hausdorff_report(const std::vector<EtaAtOrder>& etas) {
  if (etas.size() < 2)
    throw std::invalid_argument("Hausdorff trend needs at least two fractional orders");
  HausdorffReport out;
  const long n = static_cast<long>(etas.size());
  ArrayXr q(n), hd(n), sg(n);
  for (long i = 0; i < n; ++i) {
    const auto& e = etas[static_cast<std::size_t>(i)];
    HausdorffRow row;
    row.q = e.q;
    row.eta = e.eta.value;
    row.eta_err = e.eta.std_error;
    row.H_D = 2.0 - e.eta.value;
    row.H_D_err = e.eta.std_error;
    out.rows.push_back(row);
    q[i] = row.q;
    hd[i] = row.H_D;
    sg[i] = row.H_D_err;
  }
  const LineFit lf = weighted_linear_fit(q, hd, sg);
  out.slope = lf.slope;
  out.slope_err = lf.slope_err;
  out.intercept = lf.intercept;
  return out;
}

}  // namespace fracising::fss
