#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracising/engine.hpp"
#include "fracising/types.hpp"

namespace fracising::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sectioned key = value text. '#' and ';' start comment lines, sections are
// [name], keys may not repeat, keys outside a section are errors, and typed
// extraction rejects any key it does not know. No inline comments: values
// are taken verbatim to the end of the line.
struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
  mutable bool used = false;
};

struct IniDoc {
  std::vector<std::pair<std::string, std::vector<IniEntry>>> sections;  // file order

  const std::vector<IniEntry>* find(const std::string& section) const;
};

IniDoc parse_ini(const std::string& text);

enum class Mode { classical_1d, classical_2d, quantum_1d };

const char* mode_name(Mode m);
Mode parse_mode(const std::string& name);  // throws ConfigError

// Control-parameter grid: temperatures for the classical modes, transverse
// fields for the quantum mode.
struct GridSpec {
  Real lo = 0.0;
  Real hi = 0.0;
  long count = 0;
  bool log_scale = false;

  std::vector<Real> values() const;
};

struct CampaignConfig {
  Mode mode = Mode::classical_1d;
  std::vector<Real> q_list;
  std::vector<long> sizes;
  GridSpec grid;
  Real J0 = 1.0;
  Real h = 0.0;
  engine::Algorithm algorithm = engine::Algorithm::mixed;
  int clusters_per_step = 1;
  long n_equil = 0;  // 0 = adaptive
  long n_measure = 1000;
  long thin = 1;
  bool measure_corr = true;
  std::uint64_t seed = 1;
  std::string output = "runs";
  Real delta_tau = 0.05;  // quantum_1d only
  Real aspect = 1.0;      // quantum_1d only
  Real tail_tolerance = 1e-10;
};

// Strict parse + full precondition check of every referenced module, so a
// bad campaign dies before the first sweep.
CampaignConfig parse_campaign_config(const std::string& text);

struct AnalysisConfig {
  std::string store;                               // record directory from cmd_run
  std::string peak_observable = "susceptibility";  // or "specific_heat"
  bool run_collapse = false;
  bool literal_delta = false;
  bool signed_m = false;
  int n_resamples = 200;
  std::string output = "analysis";
};

AnalysisConfig parse_analysis_config(const std::string& text);

}  // namespace fracising::config
