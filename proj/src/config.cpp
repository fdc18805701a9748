#include "fracising/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "fracising/couplings.hpp"
#include "fracising/trotter.hpp"

namespace fracising::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

[[noreturn]] void fail_at(int line, const std::string& msg) {
  std::ostringstream os;
  os << "line " << line << ": " << msg;
  fail(os.str());
}

}  // namespace

const std::vector<IniEntry>* IniDoc::find(const std::string& section) const {
  for (const auto& [name, entries] : sections)
    if (name == section) return &entries;
  return nullptr;
}

IniDoc parse_ini(const std::string& text) {
  IniDoc doc;
  std::istringstream in(text);
  std::string raw;
  std::vector<IniEntry>* current = nullptr;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_at(line_no, "unterminated section header: " + line);
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail_at(line_no, "empty section name");
      if (doc.find(name)) fail_at(line_no, "duplicate section [" + name + "]");
      doc.sections.emplace_back(name, std::vector<IniEntry>{});
      current = &doc.sections.back().second;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail_at(line_no, "expected key = value: " + line);
    if (!current) fail_at(line_no, "key outside any [section]: " + line);
    IniEntry entry;
    entry.key = trim(line.substr(0, eq));
    entry.value = trim(line.substr(eq + 1));
    entry.line = line_no;
    if (entry.key.empty()) fail_at(line_no, "empty key");
    if (entry.value.empty()) fail_at(line_no, "empty value for key '" + entry.key + "'");
    for (const auto& e : *current)
      if (e.key == entry.key) fail_at(line_no, "duplicate key '" + entry.key + "'");
    current->push_back(std::move(entry));
  }
  return doc;
}

namespace {

// Typed view over one section that marks entries consumed; anything left
// unconsumed at the end is an unknown key.
class SectionView {
 public:
  SectionView(const IniDoc& doc, std::string name)
      : entries_(doc.find(name)), name_(std::move(name)) {}

  bool present() const { return entries_ != nullptr; }

  const IniEntry* lookup(const std::string& key) const {
    if (!entries_) return nullptr;
    for (const auto& e : *entries_)
      if (e.key == key) {
        e.used = true;
        return &e;
      }
    return nullptr;
  }

  std::string context(const std::string& key) const { return "[" + name_ + "] " + key; }

  std::string require_string(const std::string& key) const {
    const IniEntry* e = lookup(key);
    if (!e) fail("missing required key " + context(key));
    return e->value;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const IniEntry* e = lookup(key);
    return e ? e->value : fallback;
  }

  Real parse_real(const std::string& key, const std::string& text) const {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (errno != 0 || end != text.c_str() + text.size() || !std::isfinite(v))
      fail(context(key) + ": not a finite number: '" + text + "'");
    return v;
  }

  long parse_long(const std::string& key, const std::string& text) const {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(text.c_str(), &end, 10);
    if (errno != 0 || end != text.c_str() + text.size())
      fail(context(key) + ": not an integer: '" + text + "'");
    return v;
  }

  Real get_real(const std::string& key, Real fallback) const {
    const IniEntry* e = lookup(key);
    return e ? parse_real(key, e->value) : fallback;
  }

  long get_long(const std::string& key, long fallback) const {
    const IniEntry* e = lookup(key);
    return e ? parse_long(key, e->value) : fallback;
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
    const IniEntry* e = lookup(key);
    if (!e) return fallback;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
    if (errno != 0 || end != e->value.c_str() + e->value.size() ||
        e->value.find('-') != std::string::npos)
      fail(context(key) + ": not a non-negative integer: '" + e->value + "'");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const IniEntry* e = lookup(key);
    if (!e) return fallback;
    const std::string& v = e->value;
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    fail(context(key) + ": not a boolean: '" + v + "'");
  }

  template <typename T, typename Parse>
  std::vector<T> require_list(const std::string& key, Parse parse) const {
    const std::string text = require_string(key);
    std::vector<T> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t comma = text.find(',', pos);
      const std::string tok =
          trim(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (tok.empty()) fail(context(key) + ": empty list element");
      out.push_back(parse(key, tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  }

  std::vector<Real> require_reals(const std::string& key) const {
    return require_list<Real>(key, [this](const std::string& k, const std::string& t) {
      return parse_real(k, t);
    });
  }

  std::vector<long> require_longs(const std::string& key) const {
    return require_list<long>(key, [this](const std::string& k, const std::string& t) {
      return parse_long(k, t);
    });
  }

 private:
  const std::vector<IniEntry>* entries_;
  std::string name_;
};

void check_consumed(const IniDoc& doc, const std::set<std::string>& allowed_sections) {
  for (const auto& [name, entries] : doc.sections) {
    if (!allowed_sections.count(name)) fail("unknown section [" + name + "]");
    for (const auto& e : entries)
      if (!e.used)
        fail("unknown key '" + e.key + "' in section [" + name + "] (line " +
             std::to_string(e.line) + ")");
  }
}

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::classical_1d: return "classical_1d";
    case Mode::classical_2d: return "classical_2d";
    case Mode::quantum_1d: return "quantum_1d";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "classical_1d") return Mode::classical_1d;
  if (name == "classical_2d") return Mode::classical_2d;
  if (name == "quantum_1d") return Mode::quantum_1d;
  fail("unknown mode '" + name + "' (classical_1d, classical_2d, quantum_1d)");
}

std::vector<Real> GridSpec::values() const {
  std::vector<Real> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    const Real f = count > 1 ? static_cast<Real>(i) / static_cast<Real>(count - 1) : 0.0;
    out.push_back(log_scale ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f);
  }
  return out;
}

CampaignConfig parse_campaign_config(const std::string& text) {
  const IniDoc doc = parse_ini(text);
  CampaignConfig cfg;

  SectionView campaign(doc, "campaign");
  if (!campaign.present()) fail("missing section [campaign]");
  cfg.mode = parse_mode(campaign.require_string("mode"));
  cfg.q_list = campaign.require_reals("q");
  cfg.sizes = campaign.require_longs("sizes");
  cfg.seed = campaign.get_seed("seed", cfg.seed);
  cfg.output = campaign.get_string("output", cfg.output);

  SectionView grid(doc, "grid");
  if (!grid.present()) fail("missing section [grid]");
  cfg.grid.lo = grid.get_real("min", 0.0);
  cfg.grid.hi = grid.get_real("max", 0.0);
  cfg.grid.count = grid.get_long("count", 0);
  const std::string scale = grid.get_string("scale", "linear");
  if (scale == "log") cfg.grid.log_scale = true;
  else if (scale != "linear") fail("[grid] scale: expected linear or log, got '" + scale + "'");

  SectionView model(doc, "model");
  cfg.J0 = model.get_real("j0", cfg.J0);
  cfg.h = model.get_real("h", cfg.h);
  cfg.tail_tolerance = model.get_real("tail_tolerance", cfg.tail_tolerance);

  SectionView eng(doc, "engine");
  const std::string alg = eng.get_string("algorithm", "mixed");
  try {
    cfg.algorithm = engine::parse_algorithm(alg);
  } catch (const std::invalid_argument& e) {
    fail(std::string("[engine] algorithm: ") + e.what());
  }
  cfg.clusters_per_step = static_cast<int>(eng.get_long("clusters_per_step", 1));
  cfg.n_equil = eng.get_long("n_equil", cfg.n_equil);
  cfg.n_measure = eng.get_long("n_measure", cfg.n_measure);
  cfg.thin = eng.get_long("thin", cfg.thin);
  cfg.measure_corr = eng.get_bool("measure_corr", cfg.measure_corr);

  SectionView quantum(doc, "quantum");
  if (quantum.present() && cfg.mode != Mode::quantum_1d)
    fail("section [quantum] is only valid for mode quantum_1d");
  cfg.delta_tau = quantum.get_real("delta_tau", cfg.delta_tau);
  cfg.aspect = quantum.get_real("aspect", cfg.aspect);

  check_consumed(doc, {"campaign", "grid", "model", "engine", "quantum"});

  // every referenced module's preconditions, checked before any sweep runs
  if (cfg.q_list.empty()) fail("[campaign] q: empty list");
  for (Real q : cfg.q_list) {
    try {
      couplings::FractionalOrder order{q};
      order.require_simulable();
    } catch (const std::invalid_argument& e) {
      fail(std::string("[campaign] q: ") + e.what());
    }
  }
  std::vector<Real> q_sorted = cfg.q_list;
  std::sort(q_sorted.begin(), q_sorted.end());
  if (std::adjacent_find(q_sorted.begin(), q_sorted.end()) != q_sorted.end())
    fail("[campaign] q: duplicate values");

  if (cfg.sizes.empty()) fail("[campaign] sizes: empty list");
  for (long L : cfg.sizes)
    if (L < 2) fail("[campaign] sizes: every size must be >= 2");
  std::vector<long> s_sorted = cfg.sizes;
  std::sort(s_sorted.begin(), s_sorted.end());
  if (std::adjacent_find(s_sorted.begin(), s_sorted.end()) != s_sorted.end())
    fail("[campaign] sizes: duplicate values");

  if (cfg.grid.count < 1) fail("[grid] count: must be >= 1");
  if (!(cfg.grid.lo > 0.0))
    fail(cfg.mode == Mode::quantum_1d ? "[grid] min: transverse field must be > 0"
                                      : "[grid] min: temperature must be > 0");
  if (cfg.grid.count > 1 && !(cfg.grid.hi > cfg.grid.lo))
    fail("[grid] max: must exceed min for count > 1");
  if (cfg.grid.count == 1 && cfg.grid.hi == 0.0) cfg.grid.hi = cfg.grid.lo;
  if (!(cfg.grid.hi >= cfg.grid.lo)) fail("[grid] max: must be >= min");

  if (!(cfg.J0 > 0.0)) fail("[model] j0: must be > 0");
  if (!std::isfinite(cfg.h)) fail("[model] h: must be finite");
  if (cfg.h != 0.0 && cfg.algorithm != engine::Algorithm::metropolis)
    fail("[model] h: cluster moves need h = 0; use algorithm = metropolis");
  if (!(cfg.tail_tolerance > 0.0)) fail("[model] tail_tolerance: must be > 0");

  if (cfg.clusters_per_step < 1) fail("[engine] clusters_per_step: must be >= 1");
  if (cfg.n_equil < 0) fail("[engine] n_equil: must be >= 0");
  if (cfg.n_measure < 1) fail("[engine] n_measure: must be >= 1");
  if (cfg.thin < 1) fail("[engine] thin: must be >= 1");

  if (cfg.mode == Mode::quantum_1d) {
    if (!(cfg.delta_tau > 0.0)) fail("[quantum] delta_tau: must be > 0");
    if (!(cfg.aspect > 0.0)) fail("[quantum] aspect: must be > 0");
    for (Real g : {cfg.grid.lo, cfg.grid.hi}) {
      try {
        trotter::time_coupling(cfg.delta_tau * g);
      } catch (const std::exception& e) {
        fail("[quantum] delta_tau * g = " + std::to_string(cfg.delta_tau * g) +
             " is unusable: " + e.what());
      }
    }
  }
  return cfg;
}

AnalysisConfig parse_analysis_config(const std::string& text) {
  const IniDoc doc = parse_ini(text);
  AnalysisConfig cfg;
  SectionView analyze(doc, "analyze");
  if (!analyze.present()) fail("missing section [analyze]");
  cfg.store = analyze.require_string("store");
  cfg.peak_observable = analyze.get_string("peak_observable", cfg.peak_observable);
  cfg.run_collapse = analyze.get_bool("collapse", cfg.run_collapse);
  cfg.literal_delta = analyze.get_bool("literal_delta", cfg.literal_delta);
  cfg.signed_m = analyze.get_bool("signed_m", cfg.signed_m);
  cfg.n_resamples = static_cast<int>(analyze.get_long("n_resamples", cfg.n_resamples));
  cfg.output = analyze.get_string("output", cfg.output);
  check_consumed(doc, {"analyze"});

  if (cfg.peak_observable != "susceptibility" && cfg.peak_observable != "specific_heat")
    fail("[analyze] peak_observable: expected susceptibility or specific_heat, got '" +
         cfg.peak_observable + "'");
  if (cfg.n_resamples < 30) fail("[analyze] n_resamples: must be >= 30");
  return cfg;
}

}  // namespace fracising::config
