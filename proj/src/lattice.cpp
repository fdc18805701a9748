#include "fracising/lattice.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace fracising::lattice {

namespace {

std::vector<Bond> prune_bonds(const ArrayXr& x_couplings) {
  std::vector<Bond> bonds;
  bonds.reserve(static_cast<std::size_t>(x_couplings.size()));
  for (long r = 1; r <= x_couplings.size(); ++r)
    if (x_couplings[r - 1] != 0.0) bonds.push_back({r, x_couplings[r - 1]});
  return bonds;
}

void check_geometry(const ClassicalModel& model, const SpinConfiguration& config) {
  if (!(model.geom == config.geom))
    throw std::invalid_argument("configuration geometry does not match model");
}

}  // namespace

Geometry Geometry::chain(long L) {
  if (L < 1) throw std::invalid_argument("chain length must be >= 1");
  Geometry g;
  g.Lx = L;
  g.Ly = 1;
  g.dimension = 1;
  return g;
}

Geometry Geometry::grid(long Lx, long Ly) {
  if (Lx < 1 || Ly < 2) throw std::invalid_argument("grid needs Lx >= 1 and Ly >= 2");
  Geometry g;
  g.Lx = Lx;
  g.Ly = Ly;
  g.dimension = 2;
  return g;
}

SpinConfiguration SpinConfiguration::all_up(const Geometry& g) {
  return {g, SpinArray::Constant(g.sites(), 1)};
}

SpinConfiguration SpinConfiguration::random(const Geometry& g, Rng& rng) {
  SpinArray s(g.sites());
  for (long i = 0; i < s.size(); ++i) s[i] = (rng() & 1ULL) ? 1 : -1;
  return {g, std::move(s)};
}

long SpinConfiguration::spin_sum() const {
  long acc = 0;
  for (long i = 0; i < spins.size(); ++i) acc += spins[i];
  return acc;
}

Real SpinConfiguration::magnetization() const {
  return static_cast<Real>(spin_sum()) / static_cast<Real>(spins.size());
}

ClassicalModel ClassicalModel::chain(const couplings::FractionalOrder& order, long L, Real J0,
                                     Real h, Real tail_tolerance) {
  if (J0 <= 0.0) throw std::invalid_argument("J0 must be positive");
  ClassicalModel m;
  m.geom = Geometry::chain(L);
  m.J0 = J0;
  m.h = h;
  m.x_couplings = couplings::ring_couplings(order, L, tail_tolerance);
  m.x_bonds = prune_bonds(m.x_couplings);
  return m;
}

ClassicalModel ClassicalModel::grid(const couplings::FractionalOrder& order, long Lx, long Ly,
                                    Real J0, Real K_tau, Real h, Real tail_tolerance) {
  return grid_from_couplings(Lx, Ly, couplings::ring_couplings(order, Lx, tail_tolerance), J0,
                             K_tau, h);
}

ClassicalModel ClassicalModel::grid_from_couplings(long Lx, long Ly, ArrayXr x_couplings, Real J0,
                                                   Real K_tau, Real h) {
  if (J0 <= 0.0) throw std::invalid_argument("J0 must be positive");
  if (K_tau <= 0.0) throw std::invalid_argument("time-direction bond must be positive");
  if (x_couplings.size() != Lx / 2)
    throw std::invalid_argument("coupling list does not match Lx");
  ClassicalModel m;
  m.geom = Geometry::grid(Lx, Ly);
  m.J0 = J0;
  m.h = h;
  m.x_couplings = std::move(x_couplings);
  m.K_tau = K_tau;
  m.x_bonds = prune_bonds(m.x_couplings);
  return m;
}

Real energy(const ClassicalModel& model, const SpinConfiguration& config) {
  check_geometry(model, config);
  const Geometry& g = model.geom;
  const std::int8_t* s = config.spins.data();
  const long N = g.sites();
  const long Lx = g.Lx;

  long double acc = 0.0L;
  for (const Bond& b : model.x_bonds) {
    long pair_sum = 0;  // spin products are integers; sum exactly
    for (long row = 0; row < N; row += Lx) {
      for (long x = 0; x < Lx; ++x) {
        long xp = x + b.r;
        if (xp >= Lx) xp -= Lx;
        pair_sum += static_cast<long>(s[row + x]) * s[row + xp];
      }
    }
    // ordered enumeration hits each unordered pair once, except at the
    // half-way distance of an even ring where it hits it twice
    const Real weight = (2 * b.r == Lx) ? 0.5 : 1.0;
    acc += static_cast<long double>(b.J) * weight * pair_sum;
  }
  long double E = -static_cast<long double>(model.J0) * acc;

  if (g.dimension == 2) {
    long time_sum = 0;
    for (long i = 0; i < N; ++i) {
      long up = i + Lx;
      if (up >= N) up -= N;
      time_sum += static_cast<long>(s[i]) * s[up];
    }
    // every ordered time step counts: on Ly = 2 the single pair is counted
    // twice, exactly as the mapped action's slice sum demands
    E -= static_cast<long double>(*model.K_tau) * time_sum;
  }

  E += static_cast<long double>(model.h) * config.spin_sum();
  return static_cast<Real>(E);
}

Real local_field(const ClassicalModel& model, const SpinConfiguration& config, long site) {
  check_geometry(model, config);
  const Geometry& g = model.geom;
  if (site < 0 || site >= g.sites()) throw std::out_of_range("site outside lattice");
  const std::int8_t* s = config.spins.data();
  const long Lx = g.Lx;
  const long x = site % Lx;
  const long row = site - x;

  Real acc = 0.0;
  for (const Bond& b : model.x_bonds) {
    long xp = x + b.r;
    if (xp >= Lx) xp -= Lx;
    if (2 * b.r == Lx) {
      acc += b.J * s[row + xp];
    } else {
      long xm = x - b.r;
      if (xm < 0) xm += Lx;
      acc += b.J * (s[row + xp] + s[row + xm]);
    }
  }
  acc *= model.J0;

  if (g.dimension == 2) {
    const long N = g.sites();
    long up = site + Lx;
    if (up >= N) up -= N;
    long dn = site - Lx;
    if (dn < 0) dn += N;
    acc += *model.K_tau * (s[up] + s[dn]);
  }
  return acc;
}

Real flip_cost(const ClassicalModel& model, const SpinConfiguration& config, long site) {
  return 2.0 * config.spins[site] * (local_field(model, config, site) - model.h);
}

std::vector<ExactThermo> exact_enumeration(const ClassicalModel& model,
                                           const std::vector<Real>& betas) {
  const long N = model.geom.sites();
  if (N > 24) throw std::invalid_argument("exact enumeration capped at 24 spins");
  if (betas.empty()) throw std::invalid_argument("need at least one beta");
  const long Lx = model.geom.Lx;
  const long n_corr = Lx / 2 + 1;
  const std::uint64_t n_states = 1ULL << N;

  // Gray-code walk: state k differs from k-1 in bit ctz(k), so each step is
  // one flip_cost. First pass finds the ground shift that keeps exp() tame.
  SpinConfiguration cfg{model.geom, SpinArray::Constant(N, -1)};
  long double E = energy(model, cfg);
  long double E_min = E;
  for (std::uint64_t k = 1; k < n_states; ++k) {
    const int bit = std::countr_zero(k);
    E += flip_cost(model, cfg, bit);
    cfg.spins[bit] = static_cast<std::int8_t>(-cfg.spins[bit]);
    if (E < E_min) E_min = E;
  }

  const std::size_t nb = betas.size();
  std::vector<long double> Z(nb, 0.0L), sE(nb, 0.0L), sE2(nb, 0.0L), sm(nb, 0.0L),
      smabs(nb, 0.0L), sm2(nb, 0.0L), sm4(nb, 0.0L);
  std::vector<std::vector<long double>> scorr(nb, std::vector<long double>(n_corr, 0.0L));

  cfg.spins.setConstant(-1);
  E = energy(model, cfg);
  long m_sum = cfg.spin_sum();
  std::vector<Real> c(n_corr);
  const std::int8_t* s = cfg.spins.data();

  for (std::uint64_t k = 0; k < n_states; ++k) {
    if (k > 0) {
      const int bit = std::countr_zero(k);
      E += flip_cost(model, cfg, bit);
      m_sum -= 2 * cfg.spins[bit];
      cfg.spins[bit] = static_cast<std::int8_t>(-cfg.spins[bit]);
    }
    c[0] = 1.0;
    for (long r = 1; r < n_corr; ++r) {
      long acc = 0;
      for (long row = 0; row < N; row += Lx) {
        for (long x = 0; x < Lx; ++x) {
          long xp = x + r;
          if (xp >= Lx) xp -= Lx;
          acc += static_cast<long>(s[row + x]) * s[row + xp];
        }
      }
      c[r] = static_cast<Real>(acc) / static_cast<Real>(N);
    }
    const Real m = static_cast<Real>(m_sum) / static_cast<Real>(N);
    const Real m2 = m * m;
    const Real Ed = static_cast<Real>(E);
    for (std::size_t b = 0; b < nb; ++b) {
      const long double w = std::exp(-static_cast<long double>(betas[b]) * (E - E_min));
      Z[b] += w;
      sE[b] += w * Ed;
      sE2[b] += w * Ed * Ed;
      sm[b] += w * m;
      smabs[b] += w * std::abs(m);
      sm2[b] += w * m2;
      sm4[b] += w * m2 * m2;
      for (long r = 0; r < n_corr; ++r) scorr[b][r] += w * c[r];
    }
  }

  std::vector<ExactThermo> out(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    ExactThermo& t = out[b];
    t.beta = betas[b];
    t.log_Z = static_cast<Real>(std::log(Z[b]) - static_cast<long double>(betas[b]) * E_min);
    t.E_mean = static_cast<Real>(sE[b] / Z[b]);
    t.E2_mean = static_cast<Real>(sE2[b] / Z[b]);
    t.m_mean = static_cast<Real>(sm[b] / Z[b]);
    t.m_abs_mean = static_cast<Real>(smabs[b] / Z[b]);
    t.m2_mean = static_cast<Real>(sm2[b] / Z[b]);
    t.m4_mean = static_cast<Real>(sm4[b] / Z[b]);
    t.corr = ArrayXr(n_corr);
    for (long r = 0; r < n_corr; ++r) t.corr[r] = static_cast<Real>(scorr[b][r] / Z[b]);
  }
  return out;
}

}  // namespace fracising::lattice
