#include "fracising/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fracising::io {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  return out;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_real(Real x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_records(const std::filesystem::path& path, const MeasurementSeries& series,
                   const std::string& manifest_hash) {
  std::ofstream out = open_out(path);
  out << "# manifest: " << manifest_hash << "\n";
  out << "# lattice: Lx=" << series.Lx << " Ly=" << (series.Lx > 0 ? series.n_sites / series.Lx : 0)
      << " n_sites=" << series.n_sites << " beta=" << format_real(series.beta) << "\n";
  out << "sweep,E,m,abs_m,m2,m4\n";
  for (const auto& r : series.rows) {
    out << r.sweep << ',' << format_real(r.e) << ',' << format_real(r.m) << ','
        << format_real(r.abs_m) << ',' << format_real(r.m2) << ',' << format_real(r.m4) << "\n";
  }
  if (!out) fail(path, "write failed");
}

MeasurementSeries read_records(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  MeasurementSeries series;
  std::string line;
  bool saw_lattice = false, saw_header = false;
  long Ly = 0;
  while (std::getline(in, line)) {
    if (line.rfind("# manifest:", 0) == 0) continue;
    if (line.rfind("# lattice:", 0) == 0) {
      if (std::sscanf(line.c_str(), "# lattice: Lx=%ld Ly=%ld n_sites=%ld beta=%lf", &series.Lx,
                      &Ly, &series.n_sites, &series.beta) != 4)
        fail(path, "malformed lattice header: " + line);
      saw_lattice = true;
      continue;
    }
    if (!saw_header) {
      if (line != "sweep,E,m,abs_m,m2,m4") fail(path, "unexpected column header: " + line);
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    MeasurementRecord r;
    if (std::sscanf(line.c_str(), "%ld,%lf,%lf,%lf,%lf,%lf", &r.sweep, &r.e, &r.m, &r.abs_m,
                    &r.m2, &r.m4) != 6)
      fail(path, "malformed record row: " + line);
    series.rows.push_back(r);
  }
  if (!saw_lattice || !saw_header) fail(path, "missing header");
  return series;
}

void write_correlators(const std::filesystem::path& path, const MeasurementSeries& series,
                       const std::string& manifest_hash) {
  std::ofstream out = open_out(path);
  out << "# manifest: " << manifest_hash << "\n";
  out << "# blocks: " << series.corr_blocks.rows() << " r_max=" << series.corr_blocks.cols() - 1
      << "\n";
  out << "block,count,r,c_r\n";
  for (long b = 0; b < series.corr_blocks.rows(); ++b)
    for (long r = 0; r < series.corr_blocks.cols(); ++r)
      out << b << ',' << series.corr_block_counts[static_cast<std::size_t>(b)] << ',' << r << ','
          << format_real(series.corr_blocks(b, r)) << "\n";
  if (!out) fail(path, "write failed");
}

void read_correlators(const std::filesystem::path& path, MeasurementSeries& series) {
  std::ifstream in = open_in(path);
  std::string line;
  long n_blocks = -1, r_max = -1;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# manifest:", 0) == 0) continue;
    if (line.rfind("# blocks:", 0) == 0) {
      if (std::sscanf(line.c_str(), "# blocks: %ld r_max=%ld", &n_blocks, &r_max) != 2)
        fail(path, "malformed blocks header: " + line);
      if (n_blocks < 0 || r_max < 0) fail(path, "bad block geometry");
      series.corr_blocks.setZero(n_blocks, r_max + 1);
      series.corr_block_counts.assign(static_cast<std::size_t>(n_blocks), 0);
      continue;
    }
    if (!saw_header) {
      if (line != "block,count,r,c_r") fail(path, "unexpected column header: " + line);
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    long b = 0, count = 0, r = 0;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "%ld,%ld,%ld,%lf", &b, &count, &r, &v) != 4)
      fail(path, "malformed correlator row: " + line);
    if (b < 0 || b >= n_blocks || r < 0 || r > r_max) fail(path, "correlator row out of range");
    series.corr_blocks(b, r) = v;
    series.corr_block_counts[static_cast<std::size_t>(b)] = count;
  }
  if (n_blocks < 0 || !saw_header) fail(path, "missing header");
}

std::string file_manifest_hash(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# manifest: ", 0) != 0)
    fail(path, "no manifest hash header");
  return line.substr(std::strlen("# manifest: "));
}

namespace {

constexpr char kSnapshotMagic[8] = {'F', 'R', 'I', 'S', 'N', 'P', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::ifstream& in, T& v, const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(path, "truncated snapshot");
}

}  // namespace

void save_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  std::ofstream out = open_out(path);
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  write_pod(out, static_cast<std::int64_t>(snap.config.geom.Lx));
  write_pod(out, static_cast<std::int64_t>(snap.config.geom.Ly));
  write_pod(out, static_cast<std::int32_t>(snap.config.geom.dimension));
  write_pod(out, std::int32_t{0});
  write_pod(out, snap.q);
  write_pod(out, snap.seed);
  write_pod(out, static_cast<std::int64_t>(snap.sweep));
  out.write(reinterpret_cast<const char*>(snap.config.spins.data()),
            static_cast<std::streamsize>(snap.config.spins.size()));
  if (!out) fail(path, "write failed");
}

Snapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0)
    fail(path, "not a snapshot file");
  std::int64_t Lx = 0, Ly = 0, sweep = 0;
  std::int32_t dim = 0, pad = 0;
  Snapshot snap;
  read_pod(in, Lx, path);
  read_pod(in, Ly, path);
  read_pod(in, dim, path);
  read_pod(in, pad, path);
  read_pod(in, snap.q, path);
  read_pod(in, snap.seed, path);
  read_pod(in, sweep, path);
  if (Lx < 1 || Ly < 1 || (dim != 1 && dim != 2)) fail(path, "bad snapshot geometry");
  snap.sweep = sweep;
  snap.config.geom =
      dim == 1 ? lattice::Geometry::chain(Lx) : lattice::Geometry::grid(Lx, Ly);
  snap.config.spins.resize(Lx * Ly);
  in.read(reinterpret_cast<char*>(snap.config.spins.data()),
          static_cast<std::streamsize>(Lx * Ly));
  if (!in) fail(path, "truncated snapshot");
  for (long i = 0; i < snap.config.spins.size(); ++i)
    if (snap.config.spins[i] != 1 && snap.config.spins[i] != -1)
      fail(path, "snapshot spins must be +-1");
  return snap;
}

}  // namespace fracising::io
