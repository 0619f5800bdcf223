#pragma once

// Power management routing: panel output goes straight to the charge
// controller, or through the boost converter regulated to the target voltage.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pvpms/boost_converter.hpp"
#include "pvpms/error.hpp"

namespace pvpms {

enum class Route { Direct, Boost };

inline std::string_view to_string(Route r) { return r == Route::Direct ? "DIRECT" : "BOOST"; }

struct PmsConfig {
  double v_low = 10.0;
  double v_high = 35.0;
  double v_target = 35.0;
  double hysteresis = 0.5;
};

inline void validate(const PmsConfig& c) {
  if (!(c.v_low > 0.0 && c.v_low < c.v_high)) throw std::invalid_argument("pms requires 0 < v_low < v_high");
  if (!(c.hysteresis >= 0.0)) throw std::invalid_argument("pms hysteresis must be >= 0");
  if (!(c.v_target >= c.v_high - c.hysteresis)) throw std::invalid_argument("pms v_target must be >= v_high - hysteresis");
}

struct PmsState {
  Route route = Route::Direct;
  int step = 0;  // quantized duty index; zero on the direct route
  double duty = 0.0;
};

// Route with no history: the flowchart's sharp window [v_low, v_high).
inline Route initial_route(double v_pv, const PmsConfig& cfg) {
  return (v_pv >= cfg.v_low && v_pv < cfg.v_high) ? Route::Boost : Route::Direct;
}

// A route only flips once v_pv leaves the current route's band by more
// than the hysteresis margin.
inline Route route_decision(double v_pv, Route prev, const PmsConfig& cfg) {
  const double h = cfg.hysteresis;
  if (prev == Route::Direct) {
    return (v_pv >= cfg.v_low + h && v_pv < cfg.v_high - h) ? Route::Boost : Route::Direct;
  }
  return (v_pv >= cfg.v_low - h && v_pv < cfg.v_high + h) ? Route::Boost : Route::Direct;
}

struct PmsOutput {
  double v_to_mppt = 0.0;
  double p_to_mppt = 0.0;
  PmsState state;
  double eta = 1.0;                  // converter efficiency applied on this step
  std::optional<std::string> fault;  // set when regulation failed and the relay fell back to DIRECT
};

// One sample of the power management system. `prev` is empty on power-up.
inline PmsOutput pms_step(double v_pv, double available_p, const std::optional<PmsState>& prev, const PmsConfig& cfg,
                          const LossModel& model, double r_equiv) {
  if (!(v_pv >= 0.0)) throw std::invalid_argument("v_pv must be >= 0");
  if (!(available_p >= 0.0)) throw std::invalid_argument("available power must be >= 0");

  const Route route = prev ? route_decision(v_pv, prev->route, cfg) : initial_route(v_pv, cfg);
  PmsOutput out;
  if (route == Route::Direct || v_pv <= 0.0) {
    out.v_to_mppt = v_pv;
    out.p_to_mppt = available_p;
    return out;
  }

  try {
    if (v_pv >= cfg.v_target) {
      // Inside the upper hysteresis band: converter idles at zero duty.
      const auto s = solve_steady_state(v_pv, 0.0, r_equiv, model);
      out.v_to_mppt = s.vout;
      out.eta = s.eta;
    } else {
      const int warm = (prev && prev->route == Route::Boost) ? prev->step : 0;
      const auto reg = regulate(v_pv, cfg.v_target, r_equiv, model, warm);
      out.v_to_mppt = reg.vout;
      out.eta = reg.solution.eta;
      out.state.step = reg.step;
      out.state.duty = reg.duty;
    }
    out.state.route = Route::Boost;
    out.p_to_mppt = available_p * out.eta;
  } catch (const Unreachable& e) {
    out = PmsOutput{};
    out.v_to_mppt = v_pv;
    out.p_to_mppt = available_p;
    out.fault = e.what();
  }
  return out;
}

}  // namespace pvpms
