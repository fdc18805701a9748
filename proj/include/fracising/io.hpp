#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fracising/lattice.hpp"
#include "fracising/measurements.hpp"
#include "fracising/types.hpp"

namespace fracising::io {

// 64-bit FNV-1a of a byte string, printed as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

// %.17g: doubles survive a write/read round trip bit for bit, and the text
// never varies between runs, which keeps record files byte-identical.
std::string format_real(Real x);

// Measurement CSV: a manifest-hash header comment, a lattice metadata
// comment, the column header, then one row per record.
void write_records(const std::filesystem::path& path, const MeasurementSeries& series,
                   const std::string& manifest_hash);
// Reads rows and metadata; correlator blocks live in the sidecar file.
MeasurementSeries read_records(const std::filesystem::path& path);

// Correlator sidecar: one row per (block, r) holding the block mean of
// c_r = (1/N) sum_i s_i s_{i+r x}.
void write_correlators(const std::filesystem::path& path, const MeasurementSeries& series,
                       const std::string& manifest_hash);
void read_correlators(const std::filesystem::path& path, MeasurementSeries& series);

// The hash recorded in the first header line of any file written here.
std::string file_manifest_hash(const std::filesystem::path& path);

// Checkpoint: fixed binary header (geometry, coupling order, seed, sweep)
// plus the flat +-1 byte array.
struct Snapshot {
  lattice::SpinConfiguration config;
  Real q = 0.0;
  std::uint64_t seed = 0;
  long sweep = 0;
};

void save_snapshot(const std::filesystem::path& path, const Snapshot& snap);
Snapshot load_snapshot(const std::filesystem::path& path);

}  // namespace fracising::io
