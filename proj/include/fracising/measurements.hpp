#pragma once

#include <vector>

#include "fracising/types.hpp"

namespace fracising {

// One measurement row. Energy and magnetization are stored per site so every
// column stays O(1) regardless of system size.
struct MeasurementRecord {
  long sweep = 0;
  Real e = 0.0;   // E / N
  Real m = 0.0;   // signed magnetization density
  Real abs_m = 0.0;
  Real m2 = 0.0;
  Real m4 = 0.0;
};

// A run's measurement stream plus correlator block accumulators. Correlators
// are pre-binned into `corr_blocks` (rows = blocks, cols = r = 0..Lx/2) so a
// long run never stores an n_measure x L matrix; block means feed error bars.
struct MeasurementSeries {
  long n_sites = 0;
  long Lx = 0;
  Real beta = 0.0;
  std::vector<MeasurementRecord> rows;
  MatrixXr corr_blocks;            // block-mean of c_r per block, or 0x0 if unmeasured
  std::vector<long> corr_block_counts;

  long n_measurements() const { return static_cast<long>(rows.size()); }
  bool has_correlators() const { return corr_blocks.rows() > 0; }

  ArrayXr column(Real MeasurementRecord::* field) const {
    ArrayXr out(n_measurements());
    for (long i = 0; i < out.size(); ++i) out[i] = rows[static_cast<std::size_t>(i)].*field;
    return out;
  }
  ArrayXr column_e() const { return column(&MeasurementRecord::e); }
  ArrayXr column_m() const { return column(&MeasurementRecord::m); }
  ArrayXr column_abs_m() const { return column(&MeasurementRecord::abs_m); }
  ArrayXr column_m2() const { return column(&MeasurementRecord::m2); }
  ArrayXr column_m4() const { return column(&MeasurementRecord::m4); }

  // measurement-weighted mean over blocks of c_r
  ArrayXr corr_mean() const {
    ArrayXr acc = ArrayXr::Zero(corr_blocks.cols());
    long total = 0;
    for (long b = 0; b < corr_blocks.rows(); ++b) {
      acc += corr_blocks.row(b).array().transpose() * static_cast<Real>(corr_block_counts[b]);
      total += corr_block_counts[b];
    }
    return total > 0 ? ArrayXr(acc / static_cast<Real>(total)) : acc;
  }
};

}  // namespace fracising
