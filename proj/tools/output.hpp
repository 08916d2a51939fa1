#ifndef QPROBE_TOOLS_OUTPUT_HPP
#define QPROBE_TOOLS_OUTPUT_HPP

// Tables and their CSV / JSON rendering for the command-line tool.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "qprobe/errors.hpp"
#include "qprobe/format.hpp"

namespace qprobe::cli {

inline constexpr const char* kVersion = "qprobe 0.1.0";

/// Empty cells are written as an empty CSV field and as JSON null.
using Cell = std::variant<std::monostate, double, std::int64_t, std::uint64_t, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    detail::require(row.size() == columns.size(), "row width does not match the table header");
    rows.push_back(std::move(row));
  }
};

/// Comment block shared by every output: version, resolved settings, seed.
struct Meta {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;
};

enum class Format { csv, json };

inline std::string csv_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(double x) const { return format_double(x); }
    std::string operator()(std::int64_t x) const { return std::to_string(x); }
    std::string operator()(std::uint64_t x) const { return std::to_string(x); }
    std::string operator()(bool x) const { return x ? "1" : "0"; }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, c);
}

inline nlohmann::ordered_json json_cell(const Cell& c) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(double x) const { return x; }
    nlohmann::ordered_json operator()(std::int64_t x) const { return x; }
    nlohmann::ordered_json operator()(std::uint64_t x) const { return x; }
    nlohmann::ordered_json operator()(bool x) const { return x; }
    nlohmann::ordered_json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, c);
}

inline std::string render_csv(const Meta& meta, const Table& table) {
  std::ostringstream out;
  out << "# " << kVersion << '\n';
  out << "# command: " << meta.command << '\n';
  for (const auto& [k, v] : meta.config) out << "# " << k << " = " << v << '\n';
  out << "# seed: " << meta.seed << '\n';
  for (const auto& n : meta.notes) out << "# " << n << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
    out << '\n';
  }
  return out.str();
}

inline nlohmann::ordered_json meta_json(const Meta& meta) {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : meta.config) config[k] = v;
  nlohmann::ordered_json m = {{"version", kVersion}, {"command", meta.command}, {"config", config}, {"seed", meta.seed}};
  if (!meta.notes.empty()) m["notes"] = meta.notes;
  return m;
}

inline std::string render_json(const Meta& meta, const Table& table, nlohmann::ordered_json extra = {}) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = json_cell(row[i]);
    rows.push_back(std::move(obj));
  }
  nlohmann::ordered_json doc = {{"meta", meta_json(meta)}, {"rows", std::move(rows)}};
  if (!extra.is_null())
    for (auto& [k, v] : extra.items()) doc[k] = v;
  return doc.dump(2) + "\n";
}

/// Where the main output goes: --out if given, otherwise a file named after
/// the command in $QPROBE_OUTPUT_DIR, otherwise standard output (empty path).
inline std::filesystem::path resolve_output(const std::string& out, const std::string& command, Format format) {
  if (!out.empty()) return out;
  if (const char* dir = std::getenv("QPROBE_OUTPUT_DIR"); dir != nullptr && *dir != '\0')
    return std::filesystem::path(dir) / (command + (format == Format::json ? ".json" : ".csv"));
  return {};
}

inline void emit(const std::filesystem::path& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  file << text;
  if (!file) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace qprobe::cli

#endif  // QPROBE_TOOLS_OUTPUT_HPP
