#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sivcpt/fit_engine.hpp"

namespace sivcpt::io {

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

// Shortest round-trip decimal; "inf" / "nan" for non-finite values.
std::string format_number(double v);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Header row plus a "# config-hash: <hash>" comment line.
std::string to_csv(const Table& table, const std::string& config_hash);
nlohmann::json to_json(const Table& table, const std::string& config_hash);

nlohmann::json fit_to_json(const fit::FitResult& fit);

// Files are collected first and written together, so a failing command
// leaves the output directory untouched.
class OutputSet {
 public:
  void add(const std::string& name, std::string content);
  void add_json(const std::string& name, const nlohmann::json& doc);
  const std::map<std::string, std::string>& files() const { return files_; }
  void write_all(const std::string& dir) const;

 private:
  std::map<std::string, std::string> files_;
};

}  // namespace sivcpt::io
