#include "sivcpt/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sivcpt/errors.hpp"

namespace sivcpt::io {

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw DomainError("table: row width does not match the header");
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

nlohmann::json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isfinite(*d)) return *d;
    return format_number(*d);
  }
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

}  // namespace

std::string to_csv(const Table& table, const std::string& config_hash) {
  std::ostringstream os;
  os << "# config-hash: " << config_hash << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
    os << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const Table& table, const std::string& config_hash) {
  nlohmann::json doc;
  doc["config_hash"] = config_hash;
  doc["columns"] = table.columns;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) r.push_back(cell_json(c));
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  return doc;
}

nlohmann::json fit_to_json(const fit::FitResult& fit) {
  nlohmann::json doc;
  nlohmann::json params = nlohmann::json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    params[fit.names[i]] = {{"estimate", fit.estimates[k]}, {"sigma", fit.sigmas[k]}};
  }
  doc["parameters"] = std::move(params);
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index i = 0; i < fit.covariance.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < fit.covariance.cols(); ++j) row.push_back(fit.covariance(i, j));
    cov.push_back(std::move(row));
  }
  doc["covariance"] = std::move(cov);
  doc["residual_norm"] = fit.residual_norm;
  doc["chi2"] = fit.chi2;
  doc["reduced_chi2"] = fit.reduced_chi2;
  doc["n_points"] = fit.n_points;
  doc["converged"] = fit.converged;
  doc["iterations"] = fit.iterations;
  doc["warnings"] = fit.warnings;
  return doc;
}

void OutputSet::add(const std::string& name, std::string content) { files_[name] = std::move(content); }

void OutputSet::add_json(const std::string& name, const nlohmann::json& doc) { add(name, doc.dump(2) + "\n"); }

void OutputSet::write_all(const std::string& dir) const {
  namespace fs = std::filesystem;
  for (const auto& [name, content] : files_) {
    const fs::path path = fs::path(dir) / name;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

}  // namespace sivcpt::io
