#include "fracising/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "fracising/stats.hpp"

namespace fracising::engine {

namespace {

using lattice::flip_cost;

// Bond-activation probabilities, tabulated once per update so the growth loop
// is table lookups and one uniform per candidate.
struct BondProbabilities {
  ArrayXr p_x;       // index r-1 for r = 1..Lx/2
  Real p_tau = 0.0;  // per time neighbor (doubled coupling on a 2-slice torus)
};

BondProbabilities bond_probabilities(const ClassicalModel& model, Real beta) {
  BondProbabilities p;
  p.p_x = ArrayXr::Zero(model.x_couplings.size());
  for (const auto& bond : model.x_bonds)
    p.p_x[bond.r - 1] = -std::expm1(-2.0 * beta * model.J0 * bond.J);
  if (model.K_tau) {
    const Real weight = (model.geom.Ly == 2) ? 2.0 : 1.0;  // both time steps hit the same pair
    p.p_tau = -std::expm1(-2.0 * beta * weight * *model.K_tau);
  }
  return p;
}

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::metropolis: return "metropolis";
    case Algorithm::cluster: return "cluster";
    case Algorithm::mixed: return "mixed";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "metropolis") return Algorithm::metropolis;
  if (name == "cluster") return Algorithm::cluster;
  if (name == "mixed") return Algorithm::mixed;
  throw std::invalid_argument("unknown algorithm '" + name +
                              "' (expected metropolis, cluster, or mixed)");
}

void RunSpec::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
  if (n_equil < 0) throw std::invalid_argument("n_equil must be >= 0 (0 = adaptive)");
  if (n_measure < 1) throw std::invalid_argument("n_measure must be >= 1");
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (clusters_per_step < 1) throw std::invalid_argument("clusters_per_step must be >= 1");
  if (algorithm != Algorithm::metropolis && model.h != 0.0)
    throw std::invalid_argument("cluster moves require h = 0; use the metropolis algorithm");
  if (model.geom.sites() < 1) throw std::invalid_argument("model has no sites");
}

void metropolis_sweep(SpinConfiguration& config, const ClassicalModel& model, Real beta,
                      Rng& rng) {
  const long n = model.geom.sites();
  for (long k = 0; k < n; ++k) {
    const long site = static_cast<long>(uniform_below(rng, static_cast<std::uint64_t>(n)));
    const Real dE = flip_cost(model, config, site);
    if (dE <= 0.0 || uniform01(rng) < std::exp(-beta * dE))
      config.spins[site] = static_cast<int8_t>(-config.spins[site]);
  }
}

void cluster_update(SpinConfiguration& config, const ClassicalModel& model, Real beta, Rng& rng) {
  if (model.h != 0.0)
    throw std::invalid_argument("cluster updates are valid only at zero field");
  const long n = model.geom.sites();
  const long Lx = model.geom.Lx;
  const BondProbabilities prob = bond_probabilities(model, beta);

  thread_local std::vector<char> in_cluster;
  thread_local std::vector<long> stack;
  in_cluster.assign(static_cast<std::size_t>(n), 0);
  stack.clear();

  const long seed_site = static_cast<long>(uniform_below(rng, static_cast<std::uint64_t>(n)));
  const int8_t cluster_spin = config.spins[seed_site];
  in_cluster[static_cast<std::size_t>(seed_site)] = 1;
  stack.push_back(seed_site);

  auto try_add = [&](long j, Real p) {
    if (in_cluster[static_cast<std::size_t>(j)] || config.spins[j] != cluster_spin) return;
    if (uniform01(rng) < p) {
      in_cluster[static_cast<std::size_t>(j)] = 1;
      stack.push_back(j);
    }
  };

  while (!stack.empty()) {
    const long i = stack.back();
    stack.pop_back();
    const long x = i % Lx;
    const long row = i - x;
    for (const auto& bond : model.x_bonds) {
      const Real p = prob.p_x[bond.r - 1];
      long xp = x + bond.r;
      if (xp >= Lx) xp -= Lx;
      long xm = x - bond.r;
      if (xm < 0) xm += Lx;
      try_add(row + xp, p);
      if (xm != xp) try_add(row + xm, p);
    }
    if (model.K_tau) {
      long up = i + Lx;
      if (up >= n) up -= n;
      long dn = i - Lx;
      if (dn < 0) dn += n;
      try_add(up, prob.p_tau);
      if (dn != up) try_add(dn, prob.p_tau);
    }
  }

  for (long i = 0; i < n; ++i)
    if (in_cluster[static_cast<std::size_t>(i)])
      config.spins[i] = static_cast<int8_t>(-config.spins[i]);
}

namespace {

void advance(SpinConfiguration& config, const RunSpec& spec, Rng& rng) {
  switch (spec.algorithm) {
    case Algorithm::metropolis:
      metropolis_sweep(config, spec.model, spec.beta, rng);
      break;
    case Algorithm::cluster:
      cluster_update(config, spec.model, spec.beta, rng);
      break;
    case Algorithm::mixed:
      for (int c = 0; c < spec.clusters_per_step; ++c)
        cluster_update(config, spec.model, spec.beta, rng);
      metropolis_sweep(config, spec.model, spec.beta, rng);
      break;
  }
}

// Equilibration steps to discard: 10 * max(tau_est, 100), where tau_est comes
// from the m^2 trace of the steps taken so far. One re-estimate after the
// first target is reached, then the window is frozen.
long adaptive_equilibration(SpinConfiguration& config, const RunSpec& spec, Rng& rng) {
  constexpr long kFloor = 100;
  std::vector<Real> trace;
  long swept = 0;
  auto sweep_until = [&](long target) {
    while (swept < target) {
      advance(config, spec, rng);
      const Real m = config.magnetization();
      trace.push_back(m * m);
      ++swept;
    }
  };
  auto estimate_target = [&]() {
    ArrayXr series = Eigen::Map<const ArrayXr>(trace.data(), static_cast<long>(trace.size()));
    const Real tau = stats::autocorrelation_time(series).tau;
    return 10 * std::max(static_cast<long>(std::ceil(tau)), kFloor);
  };
  sweep_until(10 * kFloor);
  sweep_until(estimate_target());
  sweep_until(estimate_target());
  return swept;
}

void measure_correlators(const SpinConfiguration& config, ArrayXr& acc) {
  const long Lx = config.geom.Lx;
  const long Ly = config.geom.Ly;
  const Real norm = static_cast<Real>(Lx * Ly);
  for (long r = 0; r < acc.size(); ++r) {
    long pair_sum = 0;
    for (long y = 0; y < Ly; ++y) {
      const long row = y * Lx;
      for (long x = 0; x < Lx; ++x) {
        long xr = x + r;
        if (xr >= Lx) xr -= Lx;
        pair_sum += static_cast<long>(config.spins[row + x]) * config.spins[row + xr];
      }
    }
    acc[r] += static_cast<Real>(pair_sum) / norm;
  }
}

}  // namespace

MeasurementSeries run(const RunSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0));
  const long n = spec.model.geom.sites();
  SpinConfiguration config = SpinConfiguration::random(spec.model.geom, rng);

  if (spec.n_equil > 0) {
    for (long s = 0; s < spec.n_equil; ++s) advance(config, spec, rng);
  } else {
    adaptive_equilibration(config, spec, rng);
  }

  MeasurementSeries series;
  series.n_sites = n;
  series.Lx = spec.model.geom.Lx;
  series.beta = spec.beta;
  const long n_records = spec.n_measure / spec.thin;
  series.rows.reserve(static_cast<std::size_t>(std::max<long>(n_records, 0)));

  const long n_corr = spec.model.geom.Lx / 2 + 1;
  const long block_len = std::max<long>(1, n_records / 50);
  ArrayXr block_acc;
  long block_count = 0;
  std::vector<ArrayXr> blocks;
  std::vector<long> block_counts;
  if (spec.measure_corr) block_acc = ArrayXr::Zero(n_corr);
  auto close_block = [&]() {
    if (block_count == 0) return;
    blocks.push_back(block_acc / static_cast<Real>(block_count));
    block_counts.push_back(block_count);
    block_acc.setZero();
    block_count = 0;
  };

  for (long step = 1; step <= spec.n_measure; ++step) {
    advance(config, spec, rng);
    if (step % spec.thin != 0) continue;
    MeasurementRecord rec;
    rec.sweep = step;
    rec.e = lattice::energy(spec.model, config) / static_cast<Real>(n);
    rec.m = config.magnetization();
    rec.abs_m = std::abs(rec.m);
    rec.m2 = rec.m * rec.m;
    rec.m4 = rec.m2 * rec.m2;
    series.rows.push_back(rec);
    if (spec.measure_corr) {
      measure_correlators(config, block_acc);
      if (++block_count == block_len) close_block();
    }
  }
  if (spec.measure_corr) {
    close_block();
    series.corr_blocks.resize(static_cast<long>(blocks.size()), n_corr);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      series.corr_blocks.row(static_cast<long>(b)) = blocks[b].transpose();
    series.corr_block_counts = std::move(block_counts);
  }
  return series;
}

std::vector<PointResult> campaign(const std::vector<CampaignPoint>& points,
                                  std::uint64_t master_seed, int jobs) {
  if (points.empty()) throw std::invalid_argument("campaign needs at least one point");
  if (jobs < 1) jobs = 1;
  std::vector<PointResult> results(points.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= points.size()) return;
      PointResult& out = results[k];
      out.id = points[k].id;
      try {
        RunSpec spec = points[k].spec;
        spec.seed = derive_seed(master_seed, points[k].id);
        out.series = run(spec);
        out.ok = true;
      } catch (const std::exception& ex) {
        out.ok = false;
        out.error = ex.what();
      }
    }
  };

  const int n_threads = std::min<int>(jobs, static_cast<int>(points.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

}  // namespace fracising::engine
