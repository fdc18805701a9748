#include "fracising/trotter.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fracising::trotter {

void QuantumSpec::validate() const {
  order.require_simulable();
  if (L < 2) throw std::invalid_argument("quantum chain needs L >= 2");
  if (!(J0 > 0.0) || !std::isfinite(J0)) throw std::invalid_argument("J0 must be positive");
  if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("g must be positive");
  if (!std::isfinite(h)) throw std::invalid_argument("h must be finite");
  if (!(delta_tau > 0.0) || !std::isfinite(delta_tau))
    throw std::invalid_argument("delta_tau must be positive");
  if (L_tau < 2 || L_tau % 2 != 0)
    throw std::invalid_argument("L_tau must be an even number of slices >= 2");
}

Real time_coupling(Real x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::invalid_argument("delta_tau * g must be positive and finite");
  const Real t = std::tanh(x);
  if (t >= 1.0)
    throw std::range_error("time coupling underflowed to zero: delta_tau * g too large");
  if (!(t > 0.0)) throw std::range_error("time coupling overflowed: delta_tau * g too small");
  return -0.5 * std::log(t);
}

long time_slices(long L, Real delta_tau, Real aspect) {
  if (L < 2) throw std::invalid_argument("time_slices needs L >= 2");
  if (!(delta_tau > 0.0) || !(aspect > 0.0))
    throw std::invalid_argument("delta_tau and aspect must be positive");
  const Real target = aspect * static_cast<Real>(L) / delta_tau;
  if (!(target < 1e9)) throw std::invalid_argument("aspect * L / delta_tau is unreasonably large");
  long n = static_cast<long>(std::ceil(target));
  if (n < 2) n = 2;
  if (n % 2 != 0) ++n;
  return n;
}

std::string aspect_rule_label(Real delta_tau, Real aspect) {
  std::ostringstream out;
  out << "z=1: L_tau = even ceil(" << aspect << " * L / " << delta_tau << ")";
  return out.str();
}

lattice::ClassicalModel map_to_classical(const QuantumSpec& spec, Real tail_tolerance) {
  spec.validate();
  const Real K_tau = time_coupling(spec.delta_tau * spec.g);
  ArrayXr x = couplings::ring_couplings(spec.order, spec.L, tail_tolerance);
  return lattice::ClassicalModel::grid_from_couplings(spec.L, spec.L_tau, std::move(x),
                                                      spec.delta_tau * spec.J0, K_tau,
                                                      spec.delta_tau * spec.h);
}

std::vector<QuantumPointResult> quantum_campaign(const std::vector<long>& sizes,
                                                 const std::vector<Real>& g_grid,
                                                 const QuantumCampaignConfig& config,
                                                 std::uint64_t master_seed, int jobs) {
  if (sizes.empty() || g_grid.empty())
    throw std::invalid_argument("quantum campaign needs nonempty size and g grids");

  std::vector<QuantumPointResult> out;
  out.reserve(sizes.size() * g_grid.size());
  std::vector<engine::CampaignPoint> points;   // mappable points only
  std::vector<std::size_t> point_index;        // their slots in `out`
  points.reserve(sizes.size() * g_grid.size());

  std::uint64_t id = 0;
  for (long L : sizes) {
    QuantumSpec qspec;
    qspec.order = config.order;
    qspec.L = L;
    qspec.J0 = config.J0;
    qspec.h = config.h;
    qspec.delta_tau = config.delta_tau;
    qspec.L_tau = time_slices(L, config.delta_tau, config.aspect);
    for (Real g : g_grid) {
      qspec.g = g;

      QuantumPointResult res;
      res.L = L;
      res.g = g;
      res.delta_tau = config.delta_tau;
      res.L_tau = qspec.L_tau;
      res.result.id = id;

      engine::CampaignPoint point;
      point.id = id++;
      try {
        point.spec.model = map_to_classical(qspec);
      } catch (const std::exception& ex) {
        res.result.ok = false;  // mapping failures stay as isolated as run failures
        res.result.error = ex.what();
        out.push_back(std::move(res));
        continue;
      }
      point.spec.beta = 1.0;  // couplings absorb the temperature
      point.spec.algorithm = config.algorithm;
      point.spec.clusters_per_step = config.clusters_per_step;
      point.spec.n_equil = config.n_equil;
      point.spec.n_measure = config.n_measure;
      point.spec.thin = config.thin;
      point.spec.measure_corr = config.measure_corr;
      points.push_back(std::move(point));
      point_index.push_back(out.size());
      out.push_back(std::move(res));
    }
  }

  if (!points.empty()) {
    auto results = engine::campaign(points, master_seed, jobs);
    for (std::size_t i = 0; i < results.size(); ++i)
      out[point_index[i]].result = std::move(results[i]);
  }
  return out;
}

}  // namespace fracising::trotter
