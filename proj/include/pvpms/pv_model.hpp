#pragma once

// Single-diode photovoltaic module model: parameter extraction from a
// datasheet, the implicit current solve, and maximum power point search.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "pvpms/error.hpp"

namespace pvpms {

inline constexpr double kBoltzmann = 1.380649e-23;      // J/K
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kReferenceTemperature = 298.15;  // K
inline constexpr double kDefaultCellTemperature = 318.15;  // K, 45 C

struct Datasheet {
  double isc = 4.5;
  double voc = 44.0;
  double vmp = 36.0;
  double imp = 4.17;
  int n_cells = 72;
  // Short-circuit current temperature coefficient, A/K. Defaults to 0.05 %/K of isc.
  std::optional<double> alpha_isc;
};

struct PVModuleParams {
  double isc_ref = 0.0;
  double voc_ref = 0.0;
  double vmp_ref = 0.0;
  double imp_ref = 0.0;
  double n_ideality = 1.3;
  double r_s = 0.0;
  double r_sh = 0.0;
  int n_cells = 0;
  double alpha_isc = 0.0;
  double g_ref = 1000.0;
  double t_ref = kReferenceTemperature;
  // Solved together with (n_ideality, r_s, r_sh) at reference conditions.
  double i_ph_ref = 0.0;
  double i_0_ref = 0.0;
};

struct OperatingPoint {
  double v = 0.0;
  double i = 0.0;
  double p = 0.0;
};

inline double thermal_voltage(double t) { return kBoltzmann * t / kElementaryCharge; }

// n * N_s * kT/q, the exponent scale of the whole series string.
inline double diode_scale(double t, const PVModuleParams& params) {
  return params.n_ideality * params.n_cells * thermal_voltage(t);
}

inline double photo_current(double g, double t, const PVModuleParams& params) {
  return (params.i_ph_ref + params.alpha_isc * (t - params.t_ref)) * (g / params.g_ref);
}

namespace detail {

// Root of a strictly decreasing f inside [lo, hi] with f(lo) >= 0 >= f(hi).
// Newton steps are taken when they stay inside the bracket, bisection otherwise.
template <typename F, typename DF>
double solve_decreasing(F f, DF df, double lo, double hi, double f_tol) {
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 400; ++iter) {
    const double fx = f(x);
    if (std::abs(fx) < f_tol) return x;
    if (fx > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(x))) return x;
    const double slope = df(x);
    double next = (slope < 0.0 && std::isfinite(slope)) ? x - fx / slope : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

}  // namespace detail

// Terminal current at voltage v. Solves
//   i = i_ph - i_0 (exp((v + i r_s)/a) - 1) - (v + i r_s)/r_sh
// to a residual below 1e-9 A. Beyond open circuit the result is negative.
inline double pv_current(double v, double g, double t, const PVModuleParams& params) {
  const double a = diode_scale(t, params);
  const double i_ph = photo_current(g, t, params);
  const double i_0 = params.i_0_ref;
  const double r_s = params.r_s;
  const double g_sh = 1.0 / params.r_sh;

  auto residual = [&](double i) {
    const double vd = v + i * r_s;
    return i_ph - i_0 * std::expm1(vd / a) - vd * g_sh - i;
  };
  auto slope = [&](double i) {
    const double vd = v + i * r_s;
    return -i_0 * r_s / a * std::exp(vd / a) - r_s * g_sh - 1.0;
  };

  double hi = std::max(i_ph, 0.0) + i_0 + 1e-12;
  double lo = -1.0;
  for (int k = 0; k < 2000 && residual(lo) < 0.0; ++k) lo *= 2.0;
  return detail::solve_decreasing(residual, slope, lo, hi, 1e-12);
}

inline double open_circuit_voltage(double g, double t, const PVModuleParams& params) {
  const double i_ph = photo_current(g, t, params);
  if (i_ph <= 0.0) return 0.0;
  const double a = diode_scale(t, params);
  const double i_0 = params.i_0_ref;
  const double g_sh = 1.0 / params.r_sh;
  auto residual = [&](double v) { return i_ph - i_0 * std::expm1(v / a) - v * g_sh; };
  auto slope = [&](double v) { return -i_0 / a * std::exp(v / a) - g_sh; };
  const double hi = a * std::log1p(i_ph / i_0);
  return detail::solve_decreasing(residual, slope, 0.0, hi, 1e-13);
}

// Golden-section search for the maximum of v * i(v) on [0, voc(g)].
inline OperatingPoint mpp(double g, double t, const PVModuleParams& params) {
  if (g <= 0.0) return {};
  double lo = 0.0;
  double hi = open_circuit_voltage(g, t, params);
  if (hi <= 0.0) return {};

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto power = [&](double v) { return v * pv_current(v, g, t, params); };
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double p1 = power(x1);
  double p2 = power(x2);
  while (hi - lo > 1e-4) {
    if (p1 < p2) {
      lo = x1;
      x1 = x2;
      p1 = p2;
      x2 = lo + inv_phi * (hi - lo);
      p2 = power(x2);
    } else {
      hi = x2;
      x2 = x1;
      p2 = p1;
      x1 = hi - inv_phi * (hi - lo);
      p1 = power(x1);
    }
  }
  const double v = 0.5 * (lo + hi);
  const double i = pv_current(v, g, t, params);
  return {v, i, v * i};
}

namespace detail {

struct ReferenceSolution {
  double i_ph = 0.0;
  double i_0 = 0.0;
  double g_sh = 0.0;
  bool feasible = false;
};

// For fixed (n, r_s) the three datasheet points are linear in (i_ph, i_0, 1/r_sh).
inline ReferenceSolution solve_reference(const Datasheet& ds, double a, double r_s) {
  const double e1 = std::expm1(ds.isc * r_s / a);
  const double e2 = std::expm1(ds.voc / a);
  const double e3 = std::expm1((ds.vmp + ds.imp * r_s) / a);
  // Row 2 subtracted from rows 1 and 3.
  const double a11 = e2 - e1;
  const double a12 = ds.voc - ds.isc * r_s;
  const double a21 = e2 - e3;
  const double a22 = ds.voc - ds.vmp - ds.imp * r_s;
  const double det = a11 * a22 - a12 * a21;
  ReferenceSolution out;
  if (det == 0.0 || !std::isfinite(det)) return out;
  out.i_0 = (ds.isc * a22 - a12 * ds.imp) / det;
  out.g_sh = (a11 * ds.imp - a21 * ds.isc) / det;
  out.i_ph = out.i_0 * e2 + ds.voc * out.g_sh;
  out.feasible = out.i_0 > 0.0 && out.g_sh > 0.0 && out.i_ph > 0.0 && r_s * out.g_sh < 1.0;
  return out;
}

// dP/dV at the datasheet MPP; zero when the curve peaks exactly there.
inline double mpp_power_slope(const Datasheet& ds, double a, double r_s, const ReferenceSolution& ref) {
  const double cond = ref.i_0 / a * std::exp((ds.vmp + ds.imp * r_s) / a) + ref.g_sh;
  const double di_dv = -cond / (1.0 + r_s * cond);
  return ds.imp + ds.vmp * di_dv;
}

inline std::optional<PVModuleParams> calibrate_with_ideality(const Datasheet& ds, double n) {
  const double a = n * ds.n_cells * thermal_voltage(kReferenceTemperature);
  auto shunt_positive = [&](double r_s) {
    const auto ref = solve_reference(ds, a, r_s);
    return ref.g_sh > 0.0 && ref.i_0 > 0.0 && r_s * ref.g_sh < 1.0;
  };
  if (!shunt_positive(0.0)) return std::nullopt;

  // Upper end of the feasible r_s interval: where the shunt conductance reaches zero.
  double rs_hi = (ds.voc - ds.vmp) / ds.imp;
  if (!shunt_positive(rs_hi)) {
    double lo = 0.0;
    double hi = rs_hi;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (shunt_positive(mid) ? lo : hi) = mid;
    }
    rs_hi = lo;
  }

  auto slope_at = [&](double r_s) { return mpp_power_slope(ds, a, r_s, solve_reference(ds, a, r_s)); };
  double lo = 0.0;
  double hi = rs_hi;
  if (slope_at(lo) < 0.0 || slope_at(hi) > 0.0) return std::nullopt;
  for (int k = 0; k < 200 && hi - lo > 1e-14; ++k) {
    const double mid = 0.5 * (lo + hi);
    (slope_at(mid) > 0.0 ? lo : hi) = mid;
  }
  const double r_s = 0.5 * (lo + hi);
  const auto ref = solve_reference(ds, a, r_s);
  if (!ref.feasible) return std::nullopt;

  PVModuleParams p;
  p.isc_ref = ds.isc;
  p.voc_ref = ds.voc;
  p.vmp_ref = ds.vmp;
  p.imp_ref = ds.imp;
  p.n_ideality = n;
  p.r_s = r_s;
  p.r_sh = 1.0 / ref.g_sh;
  p.n_cells = ds.n_cells;
  p.alpha_isc = ds.alpha_isc.value_or(0.0005 * ds.isc);
  p.i_ph_ref = ref.i_ph;
  p.i_0_ref = ref.i_0;
  return p;
}

}  // namespace detail

// Worst relative error of the curve against (0, isc), (voc, 0) and (vmp, imp).
inline double three_point_error(const PVModuleParams& p) {
  const double t = p.t_ref;
  const double g = p.g_ref;
  const double e_sc = std::abs(pv_current(0.0, g, t, p) - p.isc_ref) / p.isc_ref;
  const double e_oc = std::abs(open_circuit_voltage(g, t, p) - p.voc_ref) / p.voc_ref;
  const double e_mp = std::abs(pv_current(p.vmp_ref, g, t, p) - p.imp_ref) / p.imp_ref;
  return std::max({e_sc, e_oc, e_mp});
}

// Five-parameter extraction. The ideality factor is taken as 1.3 when that
// admits a solution, otherwise the first feasible value on a 1.0..2.0 grid.
inline PVModuleParams calibrate_params(const Datasheet& ds) {
  if (!(ds.voc > ds.vmp && ds.vmp > 0.0)) throw std::invalid_argument("datasheet requires voc > vmp > 0");
  if (!(ds.isc > ds.imp && ds.imp > 0.0)) throw std::invalid_argument("datasheet requires isc > imp > 0");
  if (ds.n_cells < 1) throw std::invalid_argument("datasheet requires n_cells >= 1");

  std::array<double, 22> candidates{};
  candidates[0] = 1.3;
  for (int k = 0; k <= 20; ++k) candidates[static_cast<std::size_t>(k) + 1] = 1.0 + 0.05 * k;

  for (double n : candidates) {
    auto p = detail::calibrate_with_ideality(ds, n);
    if (p && three_point_error(*p) <= 0.005) return *p;
  }
  throw NonConvergence("no (n, r_s, r_sh) reproduces the datasheet points within 0.5%");
}

inline const PVModuleParams& default_panel() {
  static const PVModuleParams panel = calibrate_params(Datasheet{});
  return panel;
}

}  // namespace pvpms
