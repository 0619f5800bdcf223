#pragma once

// Minimal CSV reading/writing for the fixtures and simulation outputs.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pvpms/boost_converter.hpp"
#include "pvpms/error.hpp"
#include "pvpms/system_sim.hpp"

namespace pvpms::io {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;

  // Index of a named column, or -1.
  int find(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return static_cast<int>(k);
    }
    return -1;
  }

  std::size_t require(const std::string& name) const {
    const int k = find(name);
    if (k < 0) throw InputError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(k);
  }

  double number(std::size_t row, std::size_t col) const {
    const std::string where = source + ":" + std::to_string(line_numbers[row]);
    if (col >= rows[row].size()) throw InputError(where + ": missing field '" + header[col] + "'");
    const std::string& text = rows[row][col];
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw InputError(where + ": field '" + header[col] + "' is not a number: '" + text + "'");
    }
  }
};

// Blank lines and lines starting with '#' are skipped.
inline CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    if (t.header.empty()) {
      t.header = split_fields(s);
    } else {
      t.rows.push_back(split_fields(s));
      t.line_numbers.push_back(line_no);
    }
  }
  if (t.header.empty()) throw InputError(source + ": empty file");
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  return read_csv(in, path);
}

inline std::string fixed(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);  // no "-0.000"
  return s;
}

// Boost converter bench fixture: vin,p_in,p_out with an optional eta_pct column.
inline std::vector<BenchRow> read_bench_rows(const CsvTable& t) {
  const auto c_vin = t.require("vin");
  const auto c_pin = t.require("p_in");
  const auto c_pout = t.require("p_out");
  const int c_eta = t.find("eta_pct");
  std::vector<BenchRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    BenchRow b{t.number(r, c_vin), t.number(r, c_pin), t.number(r, c_pout), std::nullopt};
    if (c_eta >= 0) b.eta_pct = t.number(r, static_cast<std::size_t>(c_eta));
    rows.push_back(b);
  }
  return rows;
}

struct VerifyRow {
  double vin = 0.0;
  double vout_expected = 0.0;
};

inline std::vector<VerifyRow> read_verify_rows(const CsvTable& t) {
  const auto c_vin = t.require("vin");
  const auto c_out = t.require("vout_expected");
  std::vector<VerifyRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) rows.push_back({t.number(r, c_vin), t.number(r, c_out)});
  return rows;
}

// Hourly power table: hour (24 h clock) and one power column.
inline std::vector<HourlyPower> read_hourly(const CsvTable& t, const std::string& column) {
  const auto c_hour = t.require("hour");
  const auto c_w = t.require(column);
  std::vector<HourlyPower> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    rows.push_back({static_cast<int>(t.number(r, c_hour)), t.number(r, c_w)});
  }
  return rows;
}

inline void write_samples(std::ostream& out, const DayResult& day) {
  out << "t_min,g,v_mpp,p_mpp,route,v_to_mppt,p_delivered,p_load,p_battery\n";
  for (const auto& s : day.samples) {
    out << s.t << ',' << fixed(s.g) << ',' << fixed(s.v_mpp) << ',' << fixed(s.p_mpp) << ',' << to_string(s.route)
        << ',' << fixed(s.v_to_mppt) << ',' << fixed(s.p_delivered) << ',' << fixed(s.p_load) << ','
        << fixed(s.p_battery) << '\n';
  }
}

struct PowerSeries {
  std::vector<int> t_min;
  std::vector<double> p;
};

inline PowerSeries read_power_series(const CsvTable& t) {
  const auto c_t = t.require("t_min");
  const auto c_p = t.require("p_delivered");
  PowerSeries s;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    s.t_min.push_back(static_cast<int>(t.number(r, c_t)));
    s.p.push_back(t.number(r, c_p));
  }
  return s;
}

inline std::vector<PowerSample> read_samples(const CsvTable& t) {
  const std::size_t cols[] = {t.require("t_min"),     t.require("g"),         t.require("v_mpp"),
                              t.require("p_mpp"),     t.require("route"),     t.require("v_to_mppt"),
                              t.require("p_delivered"), t.require("p_load"), t.require("p_battery")};
  std::vector<PowerSample> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    PowerSample s;
    s.t = static_cast<int>(t.number(r, cols[0]));
    s.g = t.number(r, cols[1]);
    s.v_mpp = t.number(r, cols[2]);
    s.p_mpp = t.number(r, cols[3]);
    const std::string& route = t.rows[r].at(cols[4]);
    if (route != "DIRECT" && route != "BOOST") throw InputError(t.source + ": unknown route '" + route + "'");
    s.route = route == "BOOST" ? Route::Boost : Route::Direct;
    s.v_to_mppt = t.number(r, cols[5]);
    s.p_delivered = t.number(r, cols[6]);
    s.p_load = t.number(r, cols[7]);
    s.p_battery = t.number(r, cols[8]);
    out.push_back(s);
  }
  return out;
}

inline void write_hourly_summary(std::ostream& out, const DayResult& mppt_only, const DayResult& with_pms) {
  out << "hour,avg_w_mppt_only,avg_w_with_pms,gain_pct\n";
  for (std::size_t k = 0; k < mppt_only.hourly.size() && k < with_pms.hourly.size(); ++k) {
    const double a = mppt_only.hourly[k].avg_w;
    const double b = with_pms.hourly[k].avg_w;
    const double gain = a > 0.0 ? 100.0 * (b - a) / a : 0.0;
    out << mppt_only.hourly[k].hour << ',' << fixed(a, 4) << ',' << fixed(b, 4) << ',' << fixed(gain, 4) << '\n';
  }
}

inline void write_profile(std::ostream& out, const IrradianceProfile& p) {
  out << "t_min,g\n";
  for (std::size_t k = 0; k < p.samples.size(); ++k) out << p.time_at(k) << ',' << fixed(p.samples[k]) << '\n';
}

// Profile CSV `t_min,g` on a uniform grid.
inline IrradianceProfile read_profile(const CsvTable& t) {
  const auto c_t = t.require("t_min");
  const auto c_g = t.require("g");
  if (t.rows.empty()) throw InputError(t.source + ": profile has no samples");
  IrradianceProfile p;
  std::vector<int> times;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    times.push_back(static_cast<int>(t.number(r, c_t)));
    p.samples.push_back(t.number(r, c_g));
  }
  p.start_min = times.front();
  p.step_min = times.size() > 1 ? times[1] - times[0] : 5;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] != p.time_at(k)) throw InputError(t.source + ": profile times are not on a uniform grid");
  }
  validate(p);
  return p;
}

}  // namespace pvpms::io
