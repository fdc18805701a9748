#include "fracising/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fracising::stats {

namespace {

Real population_variance(const ArrayXr& x) {
  const Real mean = x.mean();
  return (x - mean).square().sum() / static_cast<Real>(x.size());
}

// tau(b) = b Var(bin means) / (2 Var(x))
Real binned_tau(const ArrayXr& x, long b, Real var1) {
  const long nb = x.size() / b;
  ArrayXr means(nb);
  for (long i = 0; i < nb; ++i) means[i] = x.segment(i * b, b).mean();
  return static_cast<Real>(b) * population_variance(means) / (2.0 * var1);
}

}  // namespace

TauEstimate autocorrelation_time(const ArrayXr& series) {
  const long n = series.size();
  if (n < 100) throw std::invalid_argument("autocorrelation time needs >= 100 samples");
  const Real var1 = population_variance(series);
  if (!(var1 > 0.0)) return {0.5, true};

  Real prev = 0.5;  // bin size 1 by definition
  for (long b = 2; n / b >= 32; b *= 2) {
    const Real tau_b = binned_tau(series, b, var1);
    if (tau_b <= prev * 1.05) return {std::max(Real(0.5), tau_b), false};
    prev = tau_b;
  }
  return {std::max(Real(0.5), prev), true};  // still climbing at the largest bin
}

BootstrapResult block_bootstrap(const MatrixXr& data, long block_len,
                                const MatrixEstimator& estimator, int n_resamples, Rng& rng) {
  const long n = data.rows();
  if (block_len < 1) throw std::invalid_argument("block length must be >= 1");
  const long n_blocks = n / block_len;
  if (n_blocks < 20) throw std::invalid_argument("block bootstrap needs >= 20 blocks");
  if (n_resamples < 2) throw std::invalid_argument("need >= 2 resamples");

  BootstrapResult out;
  out.value = estimator(data);

  MatrixXr resampled(n_blocks * block_len, data.cols());
  ArrayXr values(n_resamples);
  for (int rep = 0; rep < n_resamples; ++rep) {
    for (long bidx = 0; bidx < n_blocks; ++bidx) {
      const long pick = static_cast<long>(uniform_below(rng, static_cast<std::uint64_t>(n_blocks)));
      resampled.middleRows(bidx * block_len, block_len) = data.middleRows(pick * block_len, block_len);
    }
    values[rep] = estimator(resampled);
  }
  const Real mean = values.mean();
  out.std_error = std::sqrt((values - mean).square().sum() / static_cast<Real>(n_resamples - 1));
  return out;
}

std::vector<ObservableEstimate> correlation_estimates(const MeasurementSeries& series) {
  std::vector<ObservableEstimate> out;
  if (!series.has_correlators()) return out;
  const long B = series.corr_blocks.rows();
  const long n_r = series.corr_blocks.cols();
  const ArrayXr mcol = series.column_m();
  const Real m_mean = mcol.mean();
  const Real m_err =
      std::sqrt(population_variance(mcol) / static_cast<Real>(std::max(1L, mcol.size() - 1)));
  const ArrayXr c_means = series.corr_mean();

  out.reserve(static_cast<std::size_t>(n_r));
  for (long r = 0; r < n_r; ++r) {
    ObservableEstimate est;
    est.name = "G";
    const ArrayXr blocks = series.corr_blocks.col(r).array();
    const Real c_mean = c_means[r];
    est.value = c_mean - m_mean * m_mean;
    Real block_var = 0.0;
    if (B > 1) block_var = (blocks - blocks.mean()).square().sum() / static_cast<Real>(B - 1);
    const Real sub_err = 2.0 * std::abs(m_mean) * m_err;
    est.std_error = std::sqrt(block_var / static_cast<Real>(B) + sub_err * sub_err);
    est.n_effective = static_cast<Real>(B);
    est.flagged = B < 4;
    out.push_back(std::move(est));
  }
  return out;
}

Estimates estimate_observables(const MeasurementSeries& series, const EstimateOptions& options) {
  const long n = series.n_measurements();
  if (n < 100) throw std::invalid_argument("estimators need >= 100 measurements");
  if (series.n_sites < 1) throw std::invalid_argument("series lacks site count");
  if (!(series.beta > 0.0)) throw std::invalid_argument("series lacks beta");

  const ArrayXr e = series.column_e();
  const ArrayXr m2 = series.column_m2();
  const ArrayXr mcol = options.m_convention == MConvention::abs_m ? series.column_abs_m()
                                                                  : series.column_m();

  const TauEstimate tau_m = autocorrelation_time(mcol);
  const TauEstimate tau_e = autocorrelation_time(e);
  const TauEstimate tau_m2 = autocorrelation_time(m2);
  const Real tau_max = std::max({tau_m.tau, tau_e.tau, tau_m2.tau});

  // blocks must be >= 2 tau long; with short series the block count floor wins
  long block_len = static_cast<long>(std::ceil(2.0 * tau_max));
  bool len_flag = false;
  if (block_len > n / 20) {
    block_len = std::max(1L, n / 20);
    len_flag = true;
  }

  MatrixXr data(n, 4);
  data.col(0) = e.matrix();
  data.col(1) = mcol.matrix();
  data.col(2) = m2.matrix();
  data.col(3) = series.column_m4().matrix();

  const Real N = static_cast<Real>(series.n_sites);
  const Real T = 1.0 / series.beta;
  const bool literal_u = options.binder_literal_denominator;

  const MatrixEstimator est_M = [](const MatrixXr& d) { return d.col(1).mean(); };
  const MatrixEstimator est_chi = [N](const MatrixXr& d) {
    const Real mm = d.col(1).mean();
    return N * (d.col(2).mean() - mm * mm);
  };
  const MatrixEstimator est_C = [N, T](const MatrixXr& d) {
    const Real em = d.col(0).mean();
    const Real e2m = d.col(0).array().square().mean();
    return N * (e2m - em * em) / (T * T);
  };
  const MatrixEstimator est_U = [literal_u](const MatrixXr& d) {
    const Real m2m = d.col(2).mean();
    const Real m4m = d.col(3).mean();
    const Real denom = literal_u ? 3.0 * m2m : 3.0 * m2m * m2m;
    return denom != 0.0 ? 1.0 - m4m / denom : 0.0;
  };

  Rng rng(derive_seed(options.seed, 0));
  Estimates out;
  auto fill = [&](ObservableEstimate& dst, const char* name, const MatrixEstimator& est,
                  const TauEstimate& tau) {
    const BootstrapResult boot = block_bootstrap(data, block_len, est, options.n_resamples, rng);
    dst.name = name;
    dst.value = boot.value;
    dst.std_error = boot.std_error;
    dst.tau_int = tau.tau;
    dst.n_effective = static_cast<Real>(n) / (2.0 * tau.tau);
    dst.flagged = tau.flagged || len_flag;
  };
  fill(out.M, "M", est_M, tau_m);
  fill(out.chi, "chi", est_chi, tau_m2);
  fill(out.C, "C", est_C, tau_e);
  fill(out.U, "U", est_U, tau_m2);
  out.G = correlation_estimates(series);
  for (auto& g : out.G) g.tau_int = tau_m2.tau;
  return out;
}

}  // namespace fracising::stats
