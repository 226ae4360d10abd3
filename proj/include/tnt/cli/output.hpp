#ifndef TNT_CLI_OUTPUT_HPP
#define TNT_CLI_OUTPUT_HPP

// Deterministic CSV/JSON writers. CSV: one `# config_hash=<hex>` comment
// line, a header row, then `%.12e` values, comma separated, LF endings.

#include "tnt/husimi.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tnt::cli {

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t value);

/// `%.12e` rendering used for every numeric CSV field.
std::string format_number(double value);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
};

std::string csv_text(const Table& table, const std::string& config_hash);
/// {"config_hash", "columns", "data": {column: [values]}}.
nlohmann::json table_json(const Table& table, const std::string& config_hash);

/// Header `n_theta=..,n_phi=..,normalized=..,config_hash=..`, then n_theta
/// rows of n_phi values (rows are theta, columns are phi).
std::string qgrid_csv_text(const QGrid& grid, const std::string& config_hash);
nlohmann::json qgrid_json(const QGrid& grid, const std::string& config_hash);

/// Output directory that remembers what it wrote, so a failed run can
/// remove its partial files.
class OutputSet {
 public:
  OutputSet(std::filesystem::path dir, std::string format, std::string config_hash);

  /// Writes `stem`.csv or `stem`.json depending on the format.
  void table(const std::string& stem, const Table& table);
  void qgrid(const std::string& stem, const QGrid& grid);
  /// Always JSON.
  void json(const std::string& stem, const nlohmann::json& value);

  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }
  const std::string& hash() const { return hash_; }

  /// Remove every file written so far.
  void rollback();

 private:
  void write(const std::string& name, const std::string& contents);

  std::filesystem::path dir_;
  std::string format_;
  std::string hash_;
  std::vector<std::string> files_;
};

}  // namespace tnt::cli

#endif  // TNT_CLI_OUTPUT_HPP
