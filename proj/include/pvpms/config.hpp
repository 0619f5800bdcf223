#pragma once

// Run configuration: a flat `section.key = value` text file. Every key has a
// default, so an empty file (or no file) describes the reference setup.

#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <string>

#include "pvpms/boost_converter.hpp"
#include "pvpms/csv.hpp"
#include "pvpms/error.hpp"
#include "pvpms/pms.hpp"
#include "pvpms/pv_model.hpp"
#include "pvpms/system_sim.hpp"

#ifndef PVPMS_DATA_DIR
#define PVPMS_DATA_DIR "data"
#endif

namespace pvpms::io {

inline std::string default_fixture(const std::string& name) { return std::string(PVPMS_DATA_DIR) + "/" + name; }

class ConfigError : public InputError {
public:
  ConfigError(const std::string& source, int line, const std::string& what)
      : InputError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what) {}
};

enum class LossKind { Empirical, Analytic };
enum class ProfileSource { Table3, File };

struct RunConfig {
  Datasheet datasheet;
  double cell_temperature = kDefaultCellTemperature;
  PmsConfig pms;
  LossKind loss_kind = LossKind::Empirical;
  std::string loss_table = default_fixture("table2.csv");
  MpptControllerModel controller;
  ProfileSource profile_source = ProfileSource::Table3;
  std::string table3_path = default_fixture("table3.csv");
  std::string profile_path;
  std::string output_dir = "out";
  double alpha = 0.05;
  std::string source = "<defaults>";
};

inline LossKind parse_loss_kind(const std::string& v) {
  if (v == "empirical") return LossKind::Empirical;
  if (v == "analytic") return LossKind::Analytic;
  throw std::invalid_argument("expected 'empirical' or 'analytic', got '" + v + "'");
}

inline RunConfig parse_config(std::istream& in, const std::string& source, const std::filesystem::path& base_dir = {}) {
  RunConfig cfg;
  cfg.source = source;

  auto number = [](const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw std::invalid_argument("not a number: '" + v + "'");
    return x;
  };
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
  };

  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> keys = {
      {"panel.isc", [&](const std::string& v) { cfg.datasheet.isc = number(v); }},
      {"panel.voc", [&](const std::string& v) { cfg.datasheet.voc = number(v); }},
      {"panel.vmp", [&](const std::string& v) { cfg.datasheet.vmp = number(v); }},
      {"panel.imp", [&](const std::string& v) { cfg.datasheet.imp = number(v); }},
      {"panel.n_cells", [&](const std::string& v) { cfg.datasheet.n_cells = static_cast<int>(number(v)); }},
      {"panel.alpha_isc", [&](const std::string& v) { cfg.datasheet.alpha_isc = number(v); }},
      {"panel.temperature", [&](const std::string& v) { cfg.cell_temperature = number(v); }},
      {"pms.v_low", [&](const std::string& v) { cfg.pms.v_low = number(v); }},
      {"pms.v_high", [&](const std::string& v) { cfg.pms.v_high = number(v); }},
      {"pms.v_target", [&](const std::string& v) { cfg.pms.v_target = number(v); }},
      {"pms.hysteresis", [&](const std::string& v) { cfg.pms.hysteresis = number(v); }},
      {"loss.model", [&](const std::string& v) { cfg.loss_kind = parse_loss_kind(v); }},
      {"loss.table", [&](const std::string& v) { cfg.loss_table = path(v); }},
      {"controller.v_in_min", [&](const std::string& v) { cfg.controller.v_in_min = number(v); }},
      {"controller.v_in_max", [&](const std::string& v) { cfg.controller.v_in_max = number(v); }},
      {"controller.eta", [&](const std::string& v) { cfg.controller.eta = number(v); }},
      {"controller.battery_v", [&](const std::string& v) { cfg.controller.battery_v = number(v); }},
      {"controller.battery_capacity_wh", [&](const std::string& v) { cfg.controller.battery_capacity_wh = number(v); }},
      {"controller.battery_initial_wh", [&](const std::string& v) { cfg.controller.battery_initial_wh = number(v); }},
      {"controller.load_p", [&](const std::string& v) { cfg.controller.load_p = number(v); }},
      {"profile.source",
       [&](const std::string& v) {
         if (v == "table3") {
           cfg.profile_source = ProfileSource::Table3;
         } else if (v == "file") {
           cfg.profile_source = ProfileSource::File;
         } else {
           throw std::invalid_argument("expected 'table3' or 'file', got '" + v + "'");
         }
       }},
      {"profile.table3", [&](const std::string& v) { cfg.table3_path = path(v); }},
      {"profile.file", [&](const std::string& v) { cfg.profile_path = path(v); }},
      {"output.dir", [&](const std::string& v) { cfg.output_dir = path(v); }},
      {"stats.alpha", [&](const std::string& v) { cfg.alpha = number(v); }},
  };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(source, line_no, "unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(source, line_no, "empty value for '" + key + "'");
    try {
      it->second(value);
    } catch (const std::exception& e) {
      throw ConfigError(source, line_no, key + ": " + e.what());
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file, 0, "cannot open config file");
  return parse_config(in, file, std::filesystem::path(file).parent_path());
}

// Numeric invariants and referenced files.
inline void check(const RunConfig& cfg) {
  auto fail = [&](const std::string& field, const std::string& what) {
    throw ConfigError(cfg.source, 0, field + ": " + what);
  };
  auto guard = [&](const std::string& field, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      fail(field, e.what());
    }
  };
  guard("pms", [&] { validate(cfg.pms); });
  guard("controller", [&] { validate(cfg.controller); });
  if (!(cfg.cell_temperature > 0.0)) fail("panel.temperature", "must be > 0 K");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail("stats.alpha", "must lie in (0, 1)");
  if (!std::filesystem::exists(cfg.loss_table)) fail("loss.table", "fixture not found: " + cfg.loss_table);
  if (cfg.profile_source == ProfileSource::Table3 && !std::filesystem::exists(cfg.table3_path)) {
    fail("profile.table3", "fixture not found: " + cfg.table3_path);
  }
  if (cfg.profile_source == ProfileSource::File) {
    if (cfg.profile_path.empty()) fail("profile.file", "required when profile.source = file");
    if (!std::filesystem::exists(cfg.profile_path)) fail("profile.file", "file not found: " + cfg.profile_path);
  }
}

struct PreparedModel {
  SystemModel model;
  std::vector<BenchRow> bench_rows;
  std::optional<FitReport> fit;  // set for the analytic loss model
};

// Calibrates the panel and loads (and for the analytic model, fits) the loss table.
inline PreparedModel prepare_model(const RunConfig& cfg) {
  check(cfg);
  PreparedModel out;
  try {
    out.model.panel = calibrate_params(cfg.datasheet);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.source, 0, std::string("panel: ") + e.what());
  }
  out.model.cell_temperature = cfg.cell_temperature;
  out.model.pms = cfg.pms;
  out.model.controller = cfg.controller;
  out.bench_rows = read_bench_rows(read_csv_file(cfg.loss_table));
  if (out.bench_rows.empty()) throw InputError(cfg.loss_table + ": no rows");
  if (cfg.loss_kind == LossKind::Analytic) {
    out.fit = fit_analytic_params(out.bench_rows);
    out.model.loss = LossModel::analytic(out.fit->params);
  } else {
    try {
      out.model.loss = LossModel::empirical(table_from_rows(out.bench_rows));
    } catch (const std::invalid_argument& e) {
      throw InputError(cfg.loss_table + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pvpms::io
