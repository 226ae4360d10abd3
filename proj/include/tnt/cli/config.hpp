#ifndef TNT_CLI_CONFIG_HPP
#define TNT_CLI_CONFIG_HPP

// Run configuration for the tntsim command line: JSON parsing with
// unknown-key rejection, figure presets and physical validation.

#include "tnt/dynamics.hpp"
#include "tnt/husimi.hpp"
#include "tnt/optimizer.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnt::cli {

/// Invalid configuration: bad key, bad value or failed validation. Maps to
/// exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string preset;  // empty outside `fig`

  // Model and protocol
  int n_atoms = 100;
  double lambda = 2.0;
  std::string hamiltonian = "tnt";  // tnt | oat
  double t1 = 0.0;
  std::string readout = "none";
  std::optional<double> t2;
  std::optional<double> ratio;  // t2 = ratio * t1
  std::optional<Rotation> rotation;
  std::optional<Vec3> generator;
  std::string measurement = "sx";  // sx | sz | optimized
  std::optional<double> phi;       // encoded phase for `run` distributions
  double phi_eval = kDefaultPhiEval;
  double sigma = 0.0;

  // Scan grids
  std::vector<double> sigmas;
  std::vector<double> times;
  std::vector<double> snapshot_times;
  std::vector<double> t1_values;
  std::vector<double> ratios;
  std::vector<double> t1_grid;
  double total_time = 0.1;
  std::vector<double> asym_ratios = SweepSettings::default_asymmetric_ratios();

  BasisMode basis = BasisMode::optimized;
  BasisSearchSpec search;
  QGridSpec q_grid;
  bool husimi = false;

  // Output
  std::string format = "csv";  // csv | json
  std::string out = "out";
  int threads = 0;  // 0: OpenMP default
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig1", "fig2", "fig3", "fig4", "fig5", "fig6"};
  return names;
}

/// Preset defaults as a config fragment. Throws ConfigError for an unknown
/// preset.
nlohmann::json preset_defaults(const std::string& preset);

/// Overlay the keys present in `fragment` onto `cfg`. Unknown keys and
/// ill-typed values throw ConfigError naming the key. Number lists accept
/// either an array or {"start", "stop", "step"}.
void apply_json(RunConfig& cfg, const nlohmann::json& fragment);

/// Parse a JSON file into a fragment (ConfigError on I/O or syntax errors).
nlohmann::json load_config_file(const std::string& path);

/// Physical and structural checks, run before any computation.
void validate(const RunConfig& cfg);

/// Complete resolved configuration (every key), as written to manifests.
nlohmann::json to_json(const RunConfig& cfg);

/// Hash of the resolved configuration that determines the numbers in the
/// outputs; the output directory and thread count are excluded.
std::string config_hash(const RunConfig& cfg);

// Helpers resolving config fields into library types.
HamiltonianSpec hamiltonian_of(const RunConfig& cfg);
Readout readout_of(const RunConfig& cfg);
SweepSettings sweep_settings_of(const RunConfig& cfg);

}  // namespace tnt::cli

#endif  // TNT_CLI_CONFIG_HPP
