#include "fracising/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracising/config.hpp"
#include "fracising/couplings.hpp"
#include "fracising/engine.hpp"
#include "fracising/fss.hpp"
#include "fracising/io.hpp"
#include "fracising/stats.hpp"
#include "fracising/trotter.hpp"

namespace fracising::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kCodeVersion = "0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;
constexpr int kExitAnalysis = 4;

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw config::ConfigError("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::string q_tag(Real q) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", q);
  return buf;
}

// ---- couplings ------------------------------------------------------------

int cmd_couplings(const std::vector<Real>& qs, long r_max, long L, Real tol,
                  const std::string& out_dir) {
  if (L != 0 && L < 2)
    throw config::ConfigError("--L: ring size must be >= 2 (0 = no ring)");
  if (!(tol > 0.0)) throw config::ConfigError("--tolerance: must be > 0");
  fs::create_directories(out_dir);

  json manifest;
  manifest["format"] = "fracising-couplings-1";
  manifest["code_version"] = kCodeVersion;
  manifest["q_values"] = qs;
  manifest["r_max"] = r_max;
  manifest["L"] = L;
  manifest["tolerance"] = tol;
  const std::string hash = io::fnv1a_hex(manifest.dump());
  manifest["hash"] = hash;

  for (Real q : qs) {
    const couplings::FractionalOrder order{q};
    const auto table = couplings::build_table(order, r_max);
    // the amplitude calibration lives on a tail beyond the exported window
    Real amplitude = std::numeric_limits<Real>::quiet_NaN();
    ArrayXr residual = ArrayXr::Constant(r_max, std::numeric_limits<Real>::quiet_NaN());
    try {
      const auto ext = couplings::build_table(order, std::max(4 * r_max, 40L));
      const auto res = couplings::residual_subleading(ext, 1, r_max);
      amplitude = res.amplitude;
      residual = res.residual;
    } catch (const std::exception&) {
      // a vanishing tail (q = 2) has no power-law asymptote to subtract
    }
    ArrayXr ring;
    if (L != 0) ring = couplings::ring_couplings(order, L, tol);

    std::ofstream real_csv = open_out(fs::path(out_dir) / ("couplings_q" + q_tag(q) + ".csv"));
    real_csv << "# manifest: " << hash << "\n";
    real_csv << "# q: " << io::format_real(q) << " r_max: " << r_max << " L: " << L
             << " tolerance: " << io::format_real(tol) << "\n";
    real_csv << "r,J,J_periodic,asymptote,residual\n";
    for (long r = 1; r <= r_max; ++r) {
      const Real J = table.at(r);
      const Real Jper = (L != 0 && r <= L / 2) ? ring[r - 1]
                                               : std::numeric_limits<Real>::quiet_NaN();
      const Real asym = amplitude * std::pow(static_cast<Real>(r), -(1.0 + q));
      real_csv << r << ',' << io::format_real(J) << ',' << io::format_real(Jper) << ','
               << io::format_real(asym) << ',' << io::format_real(residual[r - 1]) << "\n";
    }

    std::ofstream mom_csv = open_out(fs::path(out_dir) / ("momentum_q" + q_tag(q) + ".csv"));
    mom_csv << "# manifest: " << hash << "\n";
    mom_csv << "# q: " << io::format_real(q) << "\n";
    mom_csv << "k,lambda\n";
    const long n_k = 512;
    for (long i = 0; i <= n_k; ++i) {
      const Real k = M_PI * static_cast<Real>(i) / static_cast<Real>(n_k);
      mom_csv << io::format_real(k) << ',' << io::format_real(couplings::momentum_coupling(order, k))
              << "\n";
    }
  }

  open_out(fs::path(out_dir) / "couplings_manifest.json") << manifest.dump(2) << "\n";
  std::cout << "wrote " << 2 * qs.size() << " coupling tables to " << out_dir << " (manifest "
            << hash << ")\n";
  return 0;
}

// ---- run -------------------------------------------------------------------

struct Outcome {
  int q_index = 0;
  Real q = 0.0;
  long L = 0;
  Real control = 0.0;  // temperature (classical) or transverse field (quantum)
  Real beta = 0.0;
  long L_tau = 0;  // 0 for classical points
  engine::PointResult res;
};

int cmd_run(const std::string& config_path, const std::string& out_override, int jobs,
            const std::optional<std::uint64_t>& seed_override) {
  config::CampaignConfig cfg = config::parse_campaign_config(slurp_file(config_path));
  if (seed_override) cfg.seed = *seed_override;
  if (!out_override.empty()) cfg.output = out_override;
  const fs::path out_dir = cfg.output;
  fs::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();

  const std::vector<Real> grid = cfg.grid.values();
  const bool quantum = cfg.mode == config::Mode::quantum_1d;
  std::vector<Outcome> outcomes;

  for (int iq = 0; iq < static_cast<int>(cfg.q_list.size()); ++iq) {
    const Real q = cfg.q_list[static_cast<std::size_t>(iq)];
    const couplings::FractionalOrder order{q};
    const std::uint64_t master_q = derive_seed(cfg.seed, static_cast<std::uint64_t>(iq));

    if (quantum) {
      trotter::QuantumCampaignConfig qc;
      qc.order = order;
      qc.J0 = cfg.J0;
      qc.h = cfg.h;
      qc.delta_tau = cfg.delta_tau;
      qc.aspect = cfg.aspect;
      qc.algorithm = cfg.algorithm;
      qc.clusters_per_step = cfg.clusters_per_step;
      qc.n_equil = cfg.n_equil;
      qc.n_measure = cfg.n_measure;
      qc.thin = cfg.thin;
      qc.measure_corr = cfg.measure_corr;
      for (auto& r : trotter::quantum_campaign(cfg.sizes, grid, qc, master_q, jobs)) {
        Outcome o;
        o.q_index = iq;
        o.q = q;
        o.L = r.L;
        o.control = r.g;
        o.beta = 1.0;
        o.L_tau = r.L_tau;
        o.res = std::move(r.result);
        outcomes.push_back(std::move(o));
      }
    } else {
      std::vector<engine::CampaignPoint> points;
      std::vector<Outcome> planned;  // aligned with points
      const long nT = static_cast<long>(grid.size());
      for (std::size_t iL = 0; iL < cfg.sizes.size(); ++iL) {
        const long L = cfg.sizes[iL];
        lattice::ClassicalModel model;
        std::string model_error;
        try {
          model = cfg.mode == config::Mode::classical_1d
                      ? lattice::ClassicalModel::chain(order, L, cfg.J0, cfg.h,
                                                       cfg.tail_tolerance)
                      : lattice::ClassicalModel::grid(order, L, L, cfg.J0, cfg.J0, cfg.h,
                                                      cfg.tail_tolerance);
        } catch (const std::exception& e) {
          model_error = e.what();
        }
        for (long iT = 0; iT < nT; ++iT) {
          Outcome o;
          o.q_index = iq;
          o.q = q;
          o.L = L;
          o.control = grid[static_cast<std::size_t>(iT)];
          o.beta = 1.0 / o.control;
          o.res.id = static_cast<std::uint64_t>(iL) * static_cast<std::uint64_t>(nT) +
                     static_cast<std::uint64_t>(iT);
          if (!model_error.empty()) {
            o.res.ok = false;
            o.res.error = model_error;
            outcomes.push_back(std::move(o));
            continue;
          }
          engine::CampaignPoint cp;
          cp.id = o.res.id;
          cp.spec.model = model;
          cp.spec.beta = o.beta;
          cp.spec.n_equil = cfg.n_equil;
          cp.spec.n_measure = cfg.n_measure;
          cp.spec.thin = cfg.thin;
          cp.spec.algorithm = cfg.algorithm;
          cp.spec.clusters_per_step = cfg.clusters_per_step;
          cp.spec.measure_corr = cfg.measure_corr;
          points.push_back(std::move(cp));
          planned.push_back(std::move(o));
        }
      }
      if (!points.empty()) {
        auto results = engine::campaign(points, master_q, jobs);
        for (std::size_t k = 0; k < results.size(); ++k) {
          planned[k].res = std::move(results[k]);
          outcomes.push_back(std::move(planned[k]));
        }
      }
    }
  }

  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) {
    return std::tie(a.q_index, a.res.id) < std::tie(b.q_index, b.res.id);
  });

  // manifest core first: record files carry its hash in their headers
  json manifest;
  manifest["format"] = "fracising-store-1";
  manifest["code_version"] = kCodeVersion;
  manifest["rng"] = kRngAlgorithm;
  manifest["mode"] = config::mode_name(cfg.mode);
  manifest["seed"] = cfg.seed;
  manifest["j0"] = cfg.J0;
  manifest["h"] = cfg.h;
  manifest["tail_tolerance"] = cfg.tail_tolerance;
  manifest["q_values"] = cfg.q_list;
  manifest["sizes"] = cfg.sizes;
  manifest["grid"] = {{"min", cfg.grid.lo},
                      {"max", cfg.grid.hi},
                      {"count", cfg.grid.count},
                      {"scale", cfg.grid.log_scale ? "log" : "linear"}};
  manifest["engine"] = {{"algorithm", engine::algorithm_name(cfg.algorithm)},
                       {"clusters_per_step", cfg.clusters_per_step},
                       {"n_equil", cfg.n_equil},
                       {"n_measure", cfg.n_measure},
                       {"thin", cfg.thin},
                       {"measure_corr", cfg.measure_corr}};
  if (quantum)
    manifest["quantum"] = {{"delta_tau", cfg.delta_tau},
                          {"aspect", cfg.aspect},
                          {"aspect_rule", trotter::aspect_rule_label(cfg.delta_tau, cfg.aspect)}};

  json jpoints = json::array();
  long n_failed = 0;
  for (const Outcome& o : outcomes) {
    json jp;
    jp["id"] = o.res.id;
    jp["q_index"] = o.q_index;
    jp["q"] = o.q;
    jp["L"] = o.L;
    jp["control"] = o.control;
    jp["beta"] = o.beta;
    jp["seed"] = derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(o.q_index)),
                             o.res.id);
    if (quantum) jp["L_tau"] = o.L_tau;
    jp["ok"] = o.res.ok;
    jp["error"] = o.res.error;
    const std::string stem = "q" + std::to_string(o.q_index) + "_p" + std::to_string(o.res.id);
    jp["records"] = o.res.ok ? json("records_" + stem + ".csv") : json(nullptr);
    jp["correlators"] = (o.res.ok && o.res.series.has_correlators())
                            ? json("corr_" + stem + ".csv")
                            : json(nullptr);
    jpoints.push_back(std::move(jp));
    if (!o.res.ok) ++n_failed;
  }
  manifest["points"] = jpoints;
  const std::string hash = io::fnv1a_hex(manifest.dump());

  for (const Outcome& o : outcomes) {
    if (!o.res.ok) continue;
    const std::string stem = "q" + std::to_string(o.q_index) + "_p" + std::to_string(o.res.id);
    io::write_records(out_dir / ("records_" + stem + ".csv"), o.res.series, hash);
    if (o.res.series.has_correlators())
      io::write_correlators(out_dir / ("corr_" + stem + ".csv"), o.res.series, hash);
  }

  manifest["hash"] = hash;
  manifest["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  open_out(out_dir / "manifest.json") << manifest.dump(2) << "\n";

  for (const Outcome& o : outcomes)
    if (!o.res.ok)
      std::cerr << "failed: q=" << q_tag(o.q) << " L=" << o.L << " control=" << q_tag(o.control)
                << ": " << o.res.error << "\n";
  std::cout << "store " << out_dir.string() << ": " << (outcomes.size() - n_failed) << "/"
            << outcomes.size() << " points ok, manifest " << hash << "\n";
  return n_failed == 0 ? 0 : kExitPartial;
}

// ---- analyze ----------------------------------------------------------------

struct LoadedPoint {
  long L = 0;
  Real control = 0.0;
  MeasurementSeries series;
  stats::Estimates est;
};

json est_json(Real value, Real err) { return json{{"value", value}, {"stderr", err}}; }

json est_json(const fss::ExponentEstimate& e) {
  return json{{"value", e.value},
              {"stderr", e.std_error},
              {"window", {e.window_lo, e.window_hi}},
              {"quality", e.quality}};
}

// linear interpolation on an observable curve, nullopt outside its window
std::optional<std::pair<Real, Real>> interp_at(const fss::ScalingCurve& c, Real t) {
  const auto& pts = c.points;
  if (pts.size() < 2 || t < pts.front().control || t > pts.back().control) return std::nullopt;
  std::size_t j = 1;
  while (j + 1 < pts.size() && pts[j].control < t) ++j;
  const auto& a = pts[j - 1];
  const auto& b = pts[j];
  const Real f = b.control > a.control ? (t - a.control) / (b.control - a.control) : 0.0;
  const Real var = (1.0 - f) * (1.0 - f) * a.std_error * a.std_error +
                   f * f * b.std_error * b.std_error;
  return std::make_pair((1.0 - f) * a.value + f * b.value, std::sqrt(var));
}

int cmd_analyze(const std::string& config_path, const std::string& out_override) {
  config::AnalysisConfig acfg = config::parse_analysis_config(slurp_file(config_path));
  if (!out_override.empty()) acfg.output = out_override;
  const fs::path store = acfg.store;
  const fs::path man_path = store / "manifest.json";
  if (!fs::exists(man_path))
    throw AnalysisError("store '" + store.string() + "' has no manifest.json (empty store?)");
  json manifest;
  try {
    manifest = json::parse(slurp_file(man_path));
  } catch (const std::exception& e) {
    throw AnalysisError("unreadable manifest: " + std::string(e.what()));
  }

  const std::string hash = manifest.at("hash").get<std::string>();
  const std::string mode = manifest.at("mode").get<std::string>();
  const bool quantum = mode == "quantum_1d";
  const int d_space = mode == "classical_2d" ? 2 : 1;  // spatial dimension for kappa
  const int d_corr = mode == "classical_1d" ? 1 : 2;   // lattice dimension hosting G(r)

  std::map<int, std::vector<LoadedPoint>> by_q;
  std::map<int, Real> q_of;
  for (const json& jp : manifest.at("points")) {
    q_of[jp.at("q_index").get<int>()] = jp.at("q").get<Real>();
    if (!jp.at("ok").get<bool>()) continue;
    LoadedPoint p;
    p.L = jp.at("L").get<long>();
    p.control = jp.at("control").get<Real>();
    p.series = io::read_records(store / jp.at("records").get<std::string>());
    if (!jp.at("correlators").is_null())
      io::read_correlators(store / jp.at("correlators").get<std::string>(), p.series);
    by_q[jp.at("q_index").get<int>()].push_back(std::move(p));
  }
  if (by_q.empty()) throw AnalysisError("store contains no successful points");
  for (auto& [iq, pts] : by_q) {
    std::set<long> sizes;
    for (const auto& p : pts) sizes.insert(p.L);
    if (sizes.size() < 3)
      throw AnalysisError("store needs >= 3 sizes per q for scaling analysis; q=" +
                          q_tag(q_of[iq]) + " has " + std::to_string(sizes.size()));
  }

  stats::EstimateOptions eopt;
  eopt.m_convention = acfg.signed_m ? stats::MConvention::signed_m : stats::MConvention::abs_m;
  eopt.n_resamples = acfg.n_resamples;
  eopt.seed = 0xa11a;
  for (auto& [iq, pts] : by_q) {
    std::sort(pts.begin(), pts.end(), [](const LoadedPoint& a, const LoadedPoint& b) {
      return std::tie(a.L, a.control) < std::tie(b.L, b.control);
    });
    for (auto& p : pts) p.est = stats::estimate_observables(p.series, eopt);
  }

  const fs::path out_dir = acfg.output;
  fs::create_directories(out_dir);
  std::ofstream curves_csv = open_out(out_dir / "curves.csv");
  curves_csv << "# manifest: " << hash << "\n"
             << "q,L,control,observable,value,stderr,tau_int,n_eff,flagged\n";
  std::ofstream corr_csv = open_out(out_dir / "correlators.csv");
  corr_csv << "# manifest: " << hash << "\n"
           << "q,L,control,r,G,G_err\n";
  std::ofstream peaks_csv = open_out(out_dir / "peaks.csv");
  peaks_csv << "# manifest: " << hash << "\n"
            << "q,observable,L,position,position_err,height,height_err,n_fit\n";
  std::ofstream shift_csv = open_out(out_dir / "shift_fit.csv");
  shift_csv << "# manifest: " << hash << "\n"
            << "q,observable,L,T_star,T_star_err,fit_T_c,fit_T_c_err,fit_inv_nu\n";
  std::ofstream expo_csv = open_out(out_dir / "exponents.csv");
  expo_csv << "# manifest: " << hash << "\n"
           << "q,name,value,stderr,window_lo,window_hi,quality\n";

  json per_q = json::array();
  std::vector<fss::EtaAtOrder> eta_rows;

  for (auto& [iq, pts] : by_q) {
    const Real q = q_of[iq];
    const couplings::FractionalOrder order{q};
    const Real kappa = fss::kappa_exponent(d_space, order);
    json block;
    block["q"] = q;
    block["kappa"] = kappa;
    block["d"] = d_space;
    block["control_parameter"] = quantum ? "g" : "T";
    std::vector<std::string> notes;

    // observable curves per size
    std::map<long, std::map<std::string, fss::ScalingCurve>> curves;
    for (const LoadedPoint& p : pts) {
      auto emit = [&](const char* name, const stats::ObservableEstimate& e) {
        curves_csv << q_tag(q) << ',' << p.L << ',' << io::format_real(p.control) << ',' << name
                   << ',' << io::format_real(e.value) << ',' << io::format_real(e.std_error)
                   << ',' << io::format_real(e.tau_int) << ',' << io::format_real(e.n_effective)
                   << ',' << (e.flagged ? 1 : 0) << "\n";
        auto& curve = curves[p.L][name];
        curve.L = p.L;
        curve.points.push_back({p.control, e.value, e.std_error});
      };
      emit("M", p.est.M);
      emit("chi", p.est.chi);
      emit("C", p.est.C);
      emit("U", p.est.U);
      for (std::size_t r = 0; r < p.est.G.size(); ++r)
        corr_csv << q_tag(q) << ',' << p.L << ',' << io::format_real(p.control) << ',' << r << ','
                 << io::format_real(p.est.G[r].value) << ','
                 << io::format_real(p.est.G[r].std_error) << "\n";
    }

    auto curves_of = [&](const std::string& name) {
      std::vector<fss::ScalingCurve> out;
      for (auto& [L, m] : curves) out.push_back(m.at(name));
      return out;
    };

    // pseudo-critical peaks for chi and C
    std::map<std::string, std::vector<fss::PseudoCritical>> pseudo;
    std::map<std::string, std::vector<fss::PeakScalingPoint>> peak_heights;
    for (const std::string name : {std::string("chi"), std::string("C")}) {
      for (const auto& [L, m] : curves) {
        try {
          const fss::PeakEstimate pk = fss::locate_peak(m.at(name));
          pseudo[name].push_back({L, pk.position, pk.position_err});
          peak_heights[name].push_back({L, pk.height, pk.height_err});
          peaks_csv << q_tag(q) << ',' << name << ',' << L << ','
                    << io::format_real(pk.position) << ',' << io::format_real(pk.position_err)
                    << ',' << io::format_real(pk.height) << ','
                    << io::format_real(pk.height_err) << ',' << pk.n_fit << "\n";
        } catch (const std::exception& e) {
          notes.push_back(name + " peak at L=" + std::to_string(L) + ": " + e.what());
        }
      }
    }

    // Binder crossing over the cumulant curves
    fss::CrossingResult crossing;
    try {
      crossing = fss::binder_crossing(curves_of("U"));
    } catch (const std::exception& e) {
      crossing.transition = false;
      crossing.note = e.what();
    }
    block["transition"] = {{"detected", crossing.transition},
                           {"T_c", crossing.transition ? json(crossing.T_c) : json(nullptr)},
                           {"T_c_err", crossing.transition ? json(crossing.T_c_err) : json(nullptr)},
                           {"n_crossings", crossing.crossings.size()},
                           {"note", crossing.note}};

    // shift-exponent extrapolation over the configured peak observable
    const std::string peak_name =
        acfg.peak_observable == "specific_heat" ? "C" : "chi";
    std::optional<fss::TcExtrapolation> shift;
    if (pseudo[peak_name].size() >= 3) {
      try {
        shift = fss::extrapolate_tc(pseudo[peak_name]);
        for (const auto& pc : pseudo[peak_name])
          shift_csv << q_tag(q) << ',' << peak_name << ',' << pc.L << ','
                    << io::format_real(pc.position) << ',' << io::format_real(pc.err) << ','
                    << io::format_real(shift->T_c) << ',' << io::format_real(shift->T_c_err)
                    << ',' << io::format_real(shift->inv_nu) << "\n";
      } catch (const std::exception& e) {
        notes.push_back(std::string("shift fit: ") + e.what());
      }
    } else {
      notes.push_back("shift fit skipped: fewer than 3 usable peaks");
    }
    block["tc_extrapolation"] =
        shift ? json{{"T_c", shift->T_c},
                     {"T_c_err", shift->T_c_err},
                     {"inv_nu", shift->inv_nu},
                     {"inv_nu_err", shift->inv_nu_err},
                     {"amplitude", shift->amplitude},
                     {"max_residual", shift->max_residual}}
              : json(nullptr);

    const std::optional<Real> T_c =
        crossing.transition ? std::optional<Real>(crossing.T_c)
                            : (shift ? std::optional<Real>(shift->T_c) : std::nullopt);

    json exponents;
    std::optional<fss::ExponentEstimate> nu;
    if (shift && shift->inv_nu > 0.0) {
      fss::ExponentEstimate e;
      e.name = "nu";
      e.value = 1.0 / shift->inv_nu;
      e.std_error = shift->inv_nu_err / (shift->inv_nu * shift->inv_nu);
      e.window_lo = static_cast<Real>(pseudo[peak_name].front().L);
      e.window_hi = static_cast<Real>(pseudo[peak_name].back().L);
      e.quality = shift->max_residual;
      nu = e;
    }
    exponents["nu"] = nu ? est_json(*nu) : json(nullptr);

    auto fit_peaks = [&](const std::string& name, const std::string& label)
        -> std::optional<fss::ExponentEstimate> {
      if (peak_heights[name].size() < 3) return std::nullopt;
      try {
        return fss::exponent_from_peaks(peak_heights[name], label, kappa);
      } catch (const std::exception& e) {
        notes.push_back(label + ": " + e.what());
        return std::nullopt;
      }
    };
    const auto gamma_ratio = fit_peaks("chi", "gamma_over_nu");
    const auto alpha_ratio = fit_peaks("C", "alpha_over_nu");
    exponents["gamma_over_nu"] = gamma_ratio ? est_json(*gamma_ratio) : json(nullptr);
    exponents["alpha_over_nu"] = alpha_ratio ? est_json(*alpha_ratio) : json(nullptr);

    // M at T_c falls like L^{-beta/nu}
    std::optional<fss::ExponentEstimate> beta_ratio;
    if (T_c) {
      std::vector<fss::PeakScalingPoint> m_at_tc;
      for (const auto& [L, m] : curves)
        if (const auto v = interp_at(m.at("M"), *T_c); v && v->first > 0.0)
          m_at_tc.push_back({L, v->first, v->second});
      if (m_at_tc.size() >= 3) {
        try {
          fss::ExponentEstimate e = fss::exponent_from_peaks(m_at_tc, "beta_over_nu", kappa);
          e.value = -e.value;  // decay exponent
          beta_ratio = e;
        } catch (const std::exception& e) {
          notes.push_back(std::string("beta_over_nu: ") + e.what());
        }
      }
    }
    exponents["beta_over_nu"] = beta_ratio ? est_json(*beta_ratio) : json(nullptr);

    // anomalous dimension from the correlators nearest the critical point
    std::optional<fss::ExponentEstimate> eta;
    {
      std::vector<fss::CorrelationData> cdata;
      for (const auto& [L, m] : curves) {
        const LoadedPoint* best = nullptr;
        for (const LoadedPoint& p : pts) {
          if (p.L != L || !p.series.has_correlators()) continue;
          const Real target = T_c ? *T_c : pts[pts.size() / 2].control;
          if (!best || std::abs(p.control - target) < std::abs(best->control - target)) best = &p;
        }
        if (!best) continue;
        fss::CorrelationData cd;
        cd.L = L;
        const long n = static_cast<long>(best->est.G.size());
        if (n < 2) continue;
        cd.r.resize(n - 1);
        cd.G.resize(n - 1);
        cd.err.resize(n - 1);
        for (long r = 1; r < n; ++r) {
          cd.r[r - 1] = static_cast<Real>(r);
          cd.G[r - 1] = best->est.G[static_cast<std::size_t>(r)].value;
          cd.err[r - 1] = best->est.G[static_cast<std::size_t>(r)].std_error;
        }
        cdata.push_back(std::move(cd));
      }
      if (cdata.size() >= 2) {
        try {
          eta = fss::extract_eta(cdata, d_corr);
        } catch (const std::exception& e) {
          notes.push_back(std::string("eta: ") + e.what());
        }
      } else {
        notes.push_back("eta skipped: correlators available on fewer than 2 sizes");
      }
    }
    exponents["eta"] = eta ? est_json(*eta) : json(nullptr);
    exponents["delta"] = json(nullptr);
    notes.push_back("delta needs an isotherm store (M vs h at fixed T); not part of this store");

    // composite exponents via nu
    auto scaled = [&](const std::optional<fss::ExponentEstimate>& ratio, const char* label)
        -> json {
      if (!ratio || !nu) return json(nullptr);
      const Real v = ratio->value * nu->value;
      const Real err = std::sqrt(ratio->value * ratio->value * nu->std_error * nu->std_error +
                                 nu->value * nu->value * ratio->std_error * ratio->std_error);
      (void)label;
      return est_json(v, err);
    };
    exponents["gamma"] = scaled(gamma_ratio, "gamma");
    exponents["beta"] = scaled(beta_ratio, "beta");
    json alpha_peaks = scaled(alpha_ratio, "alpha");
    json alpha_hyper = json(nullptr);
    json alpha_consistent = json(nullptr);
    if (nu) {
      const Real ah = fss::hyperscaling_alpha(d_space, nu->value, kappa);
      const Real ah_err = (static_cast<Real>(d_space) / kappa) * nu->std_error;
      alpha_hyper = est_json(ah, ah_err);
      if (!alpha_peaks.is_null()) {
        const Real diff = std::abs(alpha_peaks.at("value").get<Real>() - ah);
        const Real comb = std::sqrt(
            std::pow(alpha_peaks.at("stderr").get<Real>(), 2) + ah_err * ah_err);
        alpha_consistent = diff <= 2.0 * std::max(comb, 1e-12);
      }
    }
    exponents["alpha_from_peaks"] = alpha_peaks;
    exponents["alpha_hyperscaling"] = alpha_hyper;
    block["alpha_consistent"] = alpha_consistent;
    block["exponents"] = exponents;

    if (eta) {
      block["H_D"] = est_json(2.0 - eta->value, eta->std_error);
      eta_rows.push_back({q, *eta});
    } else {
      block["H_D"] = json(nullptr);
    }

    // optional chi collapse
    json collapse = json(nullptr);
    if (acfg.run_collapse) {
      try {
        fss::CollapseOptions copt;
        copt.kappa = kappa;
        const fss::CollapseResult cr = fss::optimize_collapse(curves_of("chi"), copt);
        collapse = {{"S", cr.S},
                    {"control_c", cr.params.control_c},
                    {"control_c_err", cr.control_c_err},
                    {"inv_nu", cr.params.inv_nu},
                    {"inv_nu_err", cr.inv_nu_err},
                    {"ratio", cr.params.ratio},
                    {"ratio_err", cr.ratio_err}};
      } catch (const std::exception& e) {
        notes.push_back(std::string("collapse: ") + e.what());
      }
    }
    block["collapse"] = collapse;

    // Fig 4/5 style exponent rows
    auto expo_row = [&](const char* name, const json& j) {
      if (j.is_null()) return;
      expo_csv << q_tag(q) << ',' << name << ',' << io::format_real(j.at("value").get<Real>())
               << ',' << io::format_real(j.at("stderr").get<Real>()) << ',';
      if (j.contains("window"))
        expo_csv << io::format_real(j.at("window")[0].get<Real>()) << ','
                 << io::format_real(j.at("window")[1].get<Real>()) << ','
                 << io::format_real(j.at("quality").get<Real>());
      else
        expo_csv << "nan,nan,nan";
      expo_csv << "\n";
    };
    expo_row("nu", exponents["nu"]);
    expo_row("gamma_over_nu", exponents["gamma_over_nu"]);
    expo_row("alpha_over_nu", exponents["alpha_over_nu"]);
    expo_row("beta_over_nu", exponents["beta_over_nu"]);
    expo_row("eta", exponents["eta"]);
    expo_row("gamma", exponents["gamma"]);
    expo_row("beta", exponents["beta"]);

    std::set<long> sizes_used;
    for (const auto& p : pts) sizes_used.insert(p.L);
    block["sizes"] = std::vector<long>(sizes_used.begin(), sizes_used.end());
    block["n_points"] = pts.size();
    block["notes"] = notes;
    per_q.push_back(std::move(block));
  }

  json hausdorff = json(nullptr);
  if (eta_rows.size() >= 2) {
    const fss::HausdorffReport rep = fss::hausdorff_report(eta_rows);
    std::ofstream hd_csv = open_out(out_dir / "hausdorff.csv");
    hd_csv << "# manifest: " << hash << "\n"
           << "q,eta,eta_err,H_D,H_D_err\n";
    json rows = json::array();
    for (const auto& row : rep.rows) {
      hd_csv << q_tag(row.q) << ',' << io::format_real(row.eta) << ','
             << io::format_real(row.eta_err) << ',' << io::format_real(row.H_D) << ','
             << io::format_real(row.H_D_err) << "\n";
      rows.push_back({{"q", row.q},
                      {"eta", row.eta},
                      {"eta_err", row.eta_err},
                      {"H_D", row.H_D},
                      {"H_D_err", row.H_D_err}});
    }
    hausdorff = {{"rows", rows},
                 {"slope", rep.slope},
                 {"slope_err", rep.slope_err},
                 {"intercept", rep.intercept}};
  }

  json report;
  report["format"] = "fracising-report-1";
  report["code_version"] = kCodeVersion;
  report["manifest_hash"] = hash;
  report["mode"] = mode;
  report["store"] = acfg.store;
  report["peak_observable"] = acfg.peak_observable;
  report["m_convention"] = acfg.signed_m ? "signed_m" : "abs_m";
  report["per_q"] = per_q;
  report["hausdorff_trend"] = hausdorff;
  open_out(out_dir / "report.json") << report.dump(2) << "\n";

  std::cout << "analysis of " << store.string() << " -> " << out_dir.string() << " ("
            << per_q.size() << " q values, manifest " << hash << ")\n";
  return 0;
}

// ---- report -----------------------------------------------------------------

void print_estimate(std::ostream& os, const char* label, const json& j) {
  if (j.is_null()) {
    os << "- " << label << ": n/a\n";
    return;
  }
  os << "- " << label << ": " << j.at("value").get<Real>() << " +- "
     << j.at("stderr").get<Real>() << "\n";
}

int cmd_report(const std::string& config_path, const std::string& out_path) {
  const config::AnalysisConfig acfg = config::parse_analysis_config(slurp_file(config_path));
  const fs::path rpt_path = fs::path(acfg.output) / "report.json";
  if (!fs::exists(rpt_path))
    throw AnalysisError("no report.json under '" + acfg.output + "'; run analyze first");
  json rep;
  try {
    rep = json::parse(slurp_file(rpt_path));
  } catch (const std::exception& e) {
    throw AnalysisError("unreadable report: " + std::string(e.what()));
  }

  std::ostringstream os;
  os << "# Scaling analysis summary\n\n";
  os << "- store: " << rep.at("store").get<std::string>() << "\n";
  os << "- mode: " << rep.at("mode").get<std::string>() << "\n";
  os << "- manifest: " << rep.at("manifest_hash").get<std::string>() << "\n";
  os << "- peak observable: " << rep.at("peak_observable").get<std::string>() << "\n\n";

  for (const json& block : rep.at("per_q")) {
    os << "## q = " << block.at("q").get<Real>() << " (kappa = " << block.at("kappa").get<Real>()
       << ", d = " << block.at("d").get<int>() << ")\n\n";
    const json& tr = block.at("transition");
    if (tr.at("detected").get<bool>()) {
      os << "- transition detected at " << block.at("control_parameter").get<std::string>()
         << "_c = " << tr.at("T_c").get<Real>() << " +- " << tr.at("T_c_err").get<Real>()
         << " (" << tr.at("n_crossings").get<long>() << " pair crossings)\n";
    } else {
      const std::string note = tr.at("note").get<std::string>();
      os << "- no transition detected"
         << (note.empty() || note == "no transition detected" ? std::string()
                                                              : " (" + note + ")")
         << "\n";
    }
    const json& shift = block.at("tc_extrapolation");
    if (!shift.is_null())
      os << "- peak extrapolation: T_c = " << shift.at("T_c").get<Real>() << " +- "
         << shift.at("T_c_err").get<Real>() << ", 1/nu = " << shift.at("inv_nu").get<Real>()
         << " +- " << shift.at("inv_nu_err").get<Real>() << "\n";
    const json& ex = block.at("exponents");
    print_estimate(os, "nu", ex.at("nu"));
    print_estimate(os, "gamma/nu", ex.at("gamma_over_nu"));
    print_estimate(os, "alpha/nu", ex.at("alpha_over_nu"));
    print_estimate(os, "beta/nu", ex.at("beta_over_nu"));
    print_estimate(os, "eta", ex.at("eta"));
    print_estimate(os, "H_D", block.at("H_D"));
    print_estimate(os, "alpha (hyperscaling)", ex.at("alpha_hyperscaling"));
    if (!block.at("collapse").is_null()) {
      const json& c = block.at("collapse");
      os << "- collapse: S = " << c.at("S").get<Real>() << " at control_c = "
         << c.at("control_c").get<Real>() << ", 1/nu = " << c.at("inv_nu").get<Real>()
         << ", ratio = " << c.at("ratio").get<Real>() << "\n";
    }
    os << "\n";
  }
  if (!rep.at("hausdorff_trend").is_null()) {
    const json& h = rep.at("hausdorff_trend");
    os << "## Hausdorff trend\n\n- slope of H_D vs q: " << h.at("slope").get<Real>() << " +- "
       << h.at("slope_err").get<Real>() << " (intercept " << h.at("intercept").get<Real>()
       << ")\n";
  }

  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    open_out(out_path) << os.str();
    std::cout << "report written to " << out_path << "\n";
  }
  return 0;
}

std::optional<std::uint64_t> parse_seed_override(const std::string& text) {
  if (text.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (errno != 0 || end != text.c_str() + text.size() || text.find('-') != std::string::npos)
    throw config::ConfigError("--seed-override: not a non-negative integer: '" + text + "'");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"long-range Ising simulation and finite-size-scaling toolkit"};
  app.require_subcommand(1);

  auto* cp = app.add_subcommand("couplings", "export coupling tables and momentum curves");
  std::vector<double> qs;
  long r_max = 10000, ring_L = 0;
  double tol = 1e-10;
  std::string cp_out = "couplings";
  cp->add_option("--q", qs, "fractional order(s)")->required()->expected(-1);
  cp->add_option("--r-max", r_max, "table extent")->check(CLI::PositiveNumber);
  cp->add_option("--L", ring_L, "also periodize on a ring of this (even) size");
  cp->add_option("--tolerance", tol, "certified tail bound for the ring table");
  cp->add_option("--out", cp_out, "output directory");

  std::string run_config, run_out, seed_text;
  int jobs = 1;
  auto* rn = app.add_subcommand("run", "execute a campaign from a config file");
  rn->add_option("--config", run_config, "campaign config (INI)")->required();
  rn->add_option("--out", run_out, "override the configured output directory");
  rn->add_option("--jobs", jobs, "parallel replicas")->check(CLI::Range(1, 256));
  rn->add_option("--seed-override", seed_text, "replace the configured master seed");

  std::string an_config, an_out;
  int an_jobs = 1;
  auto* an = app.add_subcommand("analyze", "run the scaling analysis over a record store");
  an->add_option("--config", an_config, "analysis config (INI)")->required();
  an->add_option("--out", an_out, "override the configured analysis directory");
  an->add_option("--jobs", an_jobs, "accepted for symmetry; analysis is single-process")
      ->check(CLI::Range(1, 256));

  std::string rp_config, rp_out;
  auto* rp = app.add_subcommand("report", "render an analysis report as text");
  rp->add_option("--config", rp_config, "analysis config (INI)")->required();
  rp->add_option("--out", rp_out, "write the text here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (cp->parsed()) return cmd_couplings(qs, r_max, ring_L, tol, cp_out);
    if (rn->parsed()) return cmd_run(run_config, run_out, jobs, parse_seed_override(seed_text));
    if (an->parsed()) return cmd_analyze(an_config, an_out);
    if (rp->parsed()) return cmd_report(rp_config, rp_out);
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (rn->parsed()) return kExitPartial;
    if (an->parsed() || rp->parsed()) return kExitAnalysis;
    return kExitConfig;
  }
  return 0;
}

}  // namespace fracising::cli
