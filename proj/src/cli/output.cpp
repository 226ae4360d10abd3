#include "tnt/cli/output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tnt::cli {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", value);
  return buf;
}

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) {
    throw std::logic_error("table row has " + std::to_string(row.size()) + " fields, expected " +
                           std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::string csv_text(const Table& table, const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

nlohmann::json table_json(const Table& table, const std::string& config_hash) {
  nlohmann::json data = nlohmann::json::object();
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    nlohmann::json col = nlohmann::json::array();
    for (const auto& row : table.rows) col.push_back(row[c]);
    data[table.columns[c]] = std::move(col);
  }
  return {{"config_hash", config_hash}, {"columns", table.columns}, {"data", std::move(data)}};
}

std::string qgrid_csv_text(const QGrid& grid, const std::string& config_hash) {
  std::string out = "n_theta=" + std::to_string(grid.n_theta) +
                    ",n_phi=" + std::to_string(grid.n_phi) +
                    ",normalized=" + (grid.normalized ? "true" : "false") +
                    ",config_hash=" + config_hash + "\n";
  for (int i = 0; i < grid.n_theta; ++i) {
    for (int j = 0; j < grid.n_phi; ++j) {
      if (j) out += ',';
      out += format_number(grid.at(i, j));
    }
    out += '\n';
  }
  return out;
}

nlohmann::json qgrid_json(const QGrid& grid, const std::string& config_hash) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < grid.n_theta; ++i) {
    std::vector<double> row(grid.values.begin() + static_cast<std::ptrdiff_t>(i) * grid.n_phi,
                            grid.values.begin() + static_cast<std::ptrdiff_t>(i + 1) * grid.n_phi);
    rows.push_back(std::move(row));
  }
  return {{"config_hash", config_hash},
          {"n_theta", grid.n_theta},
          {"n_phi", grid.n_phi},
          {"normalized", grid.normalized},
          {"values", std::move(rows)}};
}

OutputSet::OutputSet(std::filesystem::path dir, std::string format, std::string config_hash)
    : dir_(std::move(dir)), format_(std::move(format)), hash_(std::move(config_hash)) {
  std::filesystem::create_directories(dir_);
}

void OutputSet::table(const std::string& stem, const Table& t) {
  if (format_ == "json") {
    write(stem + ".json", table_json(t, hash_).dump(2) + "\n");
  } else {
    write(stem + ".csv", csv_text(t, hash_));
  }
}

void OutputSet::qgrid(const std::string& stem, const QGrid& grid) {
  if (format_ == "json") {
    write(stem + ".json", qgrid_json(grid, hash_).dump() + "\n");
  } else {
    write(stem + ".csv", qgrid_csv_text(grid, hash_));
  }
}

void OutputSet::json(const std::string& stem, const nlohmann::json& value) {
  nlohmann::json v = value;
  if (v.is_object() && !v.contains("config_hash")) v["config_hash"] = hash_;
  write(stem + ".json", v.dump(2) + "\n");
}

void OutputSet::write(const std::string& name, const std::string& contents) {
  const std::filesystem::path path = dir_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  // Registered before writing so a half-written file is also rolled back.
  files_.push_back(name);
  out << contents;
  out.close();
  if (!out) throw std::runtime_error("failed to write " + path.string());
}

void OutputSet::rollback() {
  std::error_code ec;
  for (const std::string& f : files_) std::filesystem::remove(dir_ / f, ec);
  files_.clear();
}

}  // namespace tnt::cli
