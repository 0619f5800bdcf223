#pragma once

// Quasi-static daily simulation of the generation chain
// panel -> (power management) -> MPPT charge controller -> load / battery,
// plus derivation of an irradiance profile from hourly controller output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvpms/boost_converter.hpp"
#include "pvpms/error.hpp"
#include "pvpms/pms.hpp"
#include "pvpms/pv_model.hpp"

namespace pvpms {

struct IrradianceProfile {
  int start_min = 480;  // minutes after midnight
  int step_min = 5;
  std::vector<double> samples;  // W/m^2

  int time_at(std::size_t k) const { return start_min + static_cast<int>(k) * step_min; }
  int end_min() const { return samples.empty() ? start_min : time_at(samples.size() - 1); }
};

inline void validate(const IrradianceProfile& p) {
  if (p.step_min <= 0) throw std::invalid_argument("profile step must be > 0");
  for (double g : p.samples) {
    if (!(g >= 0.0)) throw std::invalid_argument("profile irradiance must be >= 0");
  }
}

struct MpptControllerModel {
  double v_in_min = 31.0;
  double v_in_max = 50.0;
  double eta = 0.97;
  double battery_v = 24.0;
  double battery_capacity_wh = 2400.0;
  double battery_initial_wh = 1200.0;
  double load_p = 60.0;
};

inline void validate(const MpptControllerModel& m) {
  if (!(m.v_in_min < m.v_in_max)) throw std::invalid_argument("controller requires v_in_min < v_in_max");
  if (!(m.eta > 0.0 && m.eta <= 1.0)) throw std::invalid_argument("controller eta must lie in (0, 1]");
  if (!(m.load_p >= 0.0)) throw std::invalid_argument("controller load_p must be >= 0");
  if (!(m.battery_capacity_wh >= 0.0)) throw std::invalid_argument("battery capacity must be >= 0");
  if (!(m.battery_initial_wh >= 0.0 && m.battery_initial_wh <= m.battery_capacity_wh)) {
    throw std::invalid_argument("battery initial charge must lie in [0, capacity]");
  }
}

// The controller only converts while its input sits inside its voltage window.
inline double mppt_harvest(double v_avail, double p_avail, const MpptControllerModel& m) {
  if (v_avail >= m.v_in_min && v_avail <= m.v_in_max) return p_avail * m.eta;
  return 0.0;
}

struct Dispatch {
  double p_load = 0.0;
  double p_battery = 0.0;
  double p_curtailed = 0.0;
};

// Load first, excess to the battery unless it is full.
inline Dispatch dispatch(double p_delivered, const MpptControllerModel& m, double battery_soc_wh) {
  Dispatch d;
  d.p_load = std::min(p_delivered, m.load_p);
  const double excess = p_delivered - d.p_load;
  if (battery_soc_wh >= m.battery_capacity_wh) {
    d.p_curtailed = excess;
  } else {
    d.p_battery = excess;
  }
  return d;
}

enum class Scenario { MpptOnly, WithPms };

inline std::string_view to_string(Scenario s) { return s == Scenario::MpptOnly ? "mppt_only" : "with_pms"; }

struct SystemModel {
  PVModuleParams panel = default_panel();
  double cell_temperature = kDefaultCellTemperature;
  PmsConfig pms;
  LossModel loss = default_loss_model();
  MpptControllerModel controller;
};

struct PowerSample {
  int t = 0;
  double g = 0.0;
  double v_mpp = 0.0;
  double p_mpp = 0.0;
  Route route = Route::Direct;
  double v_to_mppt = 0.0;
  double p_delivered = 0.0;
  double p_load = 0.0;
  double p_battery = 0.0;
  double p_curtailed = 0.0;
  double battery_soc_wh = 0.0;  // after this sample
};

struct HourlyAverage {
  int hour = 0;
  double avg_w = 0.0;
  std::size_t count = 0;
};

struct DayResult {
  std::vector<PowerSample> samples;
  std::vector<HourlyAverage> hourly;
  double avg_power = 0.0;
  double energy_wh = 0.0;
};

inline std::string hour_label(int hour) {
  if (hour == 0) return "12 MN";
  if (hour == 12) return "12 NN";
  if (hour < 12) return std::to_string(hour) + " AM";
  return std::to_string(hour - 12) + " PM";
}

// Clock hour a sample belongs to. A terminal sample falling exactly on the
// hour closes the preceding bucket.
inline int bucket_hour(int t, bool terminal, int start_min) {
  int hour = t / 60;
  if (terminal && t % 60 == 0 && t > start_min) --hour;
  return hour;
}

inline std::vector<HourlyAverage> hourly_averages(const std::vector<int>& times, const std::vector<double>& values) {
  std::map<int, std::pair<double, std::size_t>> buckets;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const int h = bucket_hour(times[k], k + 1 == times.size(), times.front());
    auto& [sum, n] = buckets[h];
    sum += values[k];
    ++n;
  }
  std::vector<HourlyAverage> out;
  for (const auto& [h, acc] : buckets) out.push_back({h, acc.first / static_cast<double>(acc.second), acc.second});
  return out;
}

inline DayResult summarize(std::vector<PowerSample> samples, int step_min) {
  DayResult r;
  r.samples = std::move(samples);
  if (r.samples.empty()) return r;
  std::vector<int> times;
  std::vector<double> power;
  for (const auto& s : r.samples) {
    times.push_back(s.t);
    power.push_back(s.p_delivered);
  }
  r.hourly = hourly_averages(times, power);
  double sum = 0.0;
  for (double p : power) sum += p;
  r.avg_power = sum / static_cast<double>(power.size());
  const double dt_h = step_min / 60.0;
  for (std::size_t k = 1; k < power.size(); ++k) r.energy_wh += 0.5 * (power[k - 1] + power[k]) * dt_h;
  return r;
}

inline DayResult simulate_day(const IrradianceProfile& profile, Scenario scenario, const SystemModel& model) {
  if (profile.samples.empty()) throw std::invalid_argument("profile is empty");
  validate(profile);
  validate(model.pms);
  validate(model.controller);

  const auto& ctrl = model.controller;
  const double dt_h = profile.step_min / 60.0;
  double soc = ctrl.battery_initial_wh;
  std::optional<PmsState> pms_state;
  std::vector<PowerSample> out;
  out.reserve(profile.samples.size());

  for (std::size_t k = 0; k < profile.samples.size(); ++k) {
    try {
      PowerSample s;
      s.t = profile.time_at(k);
      s.g = profile.samples[k];
      const auto op = mpp(s.g, model.cell_temperature, model.panel);
      s.v_mpp = op.v;
      s.p_mpp = std::max(op.p, 0.0);

      double harvested = 0.0;
      if (scenario == Scenario::MpptOnly) {
        s.v_to_mppt = s.v_mpp;
        harvested = mppt_harvest(s.v_mpp, s.p_mpp, ctrl);
      } else {
        const double v_t = model.pms.v_target;
        const double r_equiv = s.p_mpp > 0.0 ? v_t * v_t / s.p_mpp : 1e9;
        // Always carry a state after the first sample so hysteresis applies.
        const auto step = pms_step(s.v_mpp, s.p_mpp, pms_state, model.pms, model.loss, r_equiv);
        pms_state = step.state;
        s.route = step.state.route;
        s.v_to_mppt = step.v_to_mppt;
        harvested = mppt_harvest(step.v_to_mppt, step.p_to_mppt, ctrl);
      }

      const auto d = dispatch(harvested, ctrl, soc);
      s.p_load = d.p_load;
      s.p_battery = d.p_battery;
      s.p_curtailed = d.p_curtailed;
      s.p_delivered = d.p_load + d.p_battery;
      soc = std::min(ctrl.battery_capacity_wh, soc + d.p_battery * dt_h);
      s.battery_soc_wh = soc;
      out.push_back(s);
    } catch (const ModelError& e) {
      throw SampleError(k, e.what());
    } catch (const std::invalid_argument& e) {
      throw SampleError(k, e.what());
    }
  }
  return summarize(std::move(out), profile.step_min);
}

struct HourlyPower {
  int hour = 0;
  double watts = 0.0;
};

struct ProfileAnchor {
  int hour = 0;
  double t_min = 0.0;  // anchor time, mean sample time of the hour bucket
  double g = 0.0;
};

struct DerivedProfile {
  IrradianceProfile profile;
  std::vector<ProfileAnchor> anchors;
  int refinement_passes = 0;
};

struct DeriveOptions {
  double g_max = 1400.0;
  int step_min = 5;
  double rel_tolerance = 1e-4;
  int max_passes = 200;
};

// Irradiance at which the controller's output from the panel MPP equals `watts`.
inline double irradiance_for_power(double watts, const SystemModel& model, double g_max) {
  if (watts <= 0.0) return 0.0;
  const double eta = model.controller.eta;
  auto output = [&](double g) { return mpp(g, model.cell_temperature, model.panel).p * eta; };
  double lo = 0.0;
  double hi = g_max;
  if (output(hi) < watts) return -1.0;
  for (int k = 0; k < 200 && hi - lo > 1e-9; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double p = output(mid);
    if (std::abs(p - watts) < 1e-7) return mid;
    (p < watts ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline IrradianceProfile interpolate_anchors(const std::vector<ProfileAnchor>& anchors, int start_min, int end_min,
                                             int step_min) {
  IrradianceProfile p;
  p.start_min = start_min;
  p.step_min = step_min;
  for (int t = start_min; t <= end_min; t += step_min) {
    double g = 0.0;
    if (t <= anchors.front().t_min) {
      g = anchors.front().g;
    } else if (t >= anchors.back().t_min) {
      g = anchors.back().g;
    } else {
      for (std::size_t k = 1; k < anchors.size(); ++k) {
        if (t <= anchors[k].t_min) {
          const auto& a = anchors[k - 1];
          const auto& b = anchors[k];
          const double w = (t - a.t_min) / (b.t_min - a.t_min);
          g = a.g + w * (b.g - a.g);
          break;
        }
      }
    }
    p.samples.push_back(g);
  }
  return p;
}

// Builds a 5-minute irradiance profile whose MPPT-only simulation reproduces
// the given hourly average powers. Each hour's irradiance is found by
// bisection on the monotone map g -> mpp(g).p * eta; the anchors are then
// re-solved against adjusted targets until the bucket means match.
inline DerivedProfile derive_profile(const std::vector<HourlyPower>& hourly, const SystemModel& model,
                                     const DeriveOptions& opt = {}) {
  if (hourly.empty()) throw std::invalid_argument("no hourly powers given");
  for (std::size_t k = 0; k < hourly.size(); ++k) {
    if (!(hourly[k].watts >= 0.0)) throw std::invalid_argument("hourly powers must be >= 0");
    if (k > 0 && hourly[k].hour != hourly[k - 1].hour + 1) throw std::invalid_argument("hours must be consecutive");
  }
  validate(model.controller);

  const int start = hourly.front().hour * 60;
  const int end = (hourly.back().hour + 1) * 60;

  std::vector<ProfileAnchor> anchors;
  {
    std::map<int, std::pair<double, int>> acc;
    for (int t = start; t <= end; t += opt.step_min) {
      auto& [sum, n] = acc[bucket_hour(t, t + opt.step_min > end, start)];
      sum += t;
      ++n;
    }
    for (const auto& h : hourly) {
      const auto& [sum, n] = acc[h.hour];
      anchors.push_back({h.hour, sum / n, 0.0});
    }
  }

  std::vector<double> adjusted;
  for (const auto& h : hourly) adjusted.push_back(h.watts);

  auto solve_anchors = [&]() {
    for (std::size_t k = 0; k < hourly.size(); ++k) {
      const double g = irradiance_for_power(adjusted[k], model, opt.g_max);
      if (g < 0.0) {
        throw Unreachable("hour " + hour_label(hourly[k].hour) + ": " + std::to_string(hourly[k].watts) +
                          " W exceeds panel capability at g = " + std::to_string(opt.g_max) + " W/m2");
      }
      anchors[k].g = g;
    }
  };

  DerivedProfile out;
  solve_anchors();
  const double p_cap = mpp(opt.g_max, model.cell_temperature, model.panel).p * model.controller.eta;
  for (int pass = 0; pass < opt.max_passes; ++pass) {
    out.profile = interpolate_anchors(anchors, start, end, opt.step_min);
    const auto day = simulate_day(out.profile, Scenario::MpptOnly, model);
    double worst = 0.0;
    for (std::size_t k = 0; k < hourly.size(); ++k) {
      const double target = hourly[k].watts;
      const double actual = day.hourly[k].avg_w;
      if (target <= 0.0) continue;
      worst = std::max(worst, std::abs(actual - target) / target);
      if (actual > 0.0) {
        adjusted[k] *= target / actual;
      } else {
        adjusted[k] += target;
      }
      adjusted[k] = std::min(adjusted[k], p_cap);
    }
    out.refinement_passes = pass;
    if (worst < opt.rel_tolerance) break;
    solve_anchors();
  }
  out.anchors = anchors;
  return out;
}

struct Comparison {
  double avg_a = 0.0;
  double avg_b = 0.0;
  double gain_pct = 0.0;
};

inline Comparison compare(const DayResult& a, const DayResult& b) {
  if (a.samples.size() != b.samples.size()) throw GridMismatch("results have different sample counts");
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    if (a.samples[k].t != b.samples[k].t) throw GridMismatch("results have different time grids");
  }
  Comparison c{a.avg_power, b.avg_power, 0.0};
  if (c.avg_a != 0.0) {
    c.gain_pct = 100.0 * (c.avg_b - c.avg_a) / c.avg_a;
  } else if (c.avg_b != 0.0) {
    c.gain_pct = std::copysign(INFINITY, c.avg_b);
  }
  return c;
}

// Hourly powers of the MPPT-only system over a day, 8 AM through 5 PM.
inline std::vector<HourlyPower> table3_mppt_only() {
  return {{8, 42.35},  {9, 66.11},  {10, 107.98}, {11, 134.23}, {12, 137.47},
          {13, 122.0}, {14, 100.93}, {15, 87.0},   {16, 49.07},  {17, 10.87}};
}

inline std::vector<HourlyPower> table3_with_pms() {
  return {{8, 47.07},   {9, 80.93},   {10, 112.47}, {11, 130.43}, {12, 144.15},
          {13, 133.42}, {14, 117.17}, {15, 98.06},  {16, 57.34},  {17, 12.25}};
}

}  // namespace pvpms
