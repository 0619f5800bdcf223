#pragma once

// Steady-state lossy boost converter, its loss models, the analytic loss fit
// and the quantized PWM regulation loop.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pvpms/error.hpp"

namespace pvpms {

inline constexpr double kMaxDuty = 0.95;
inline constexpr int kDefaultDutySteps = 255;
inline constexpr double kSwitchingFrequency = 32'500.0;  // Hz
inline constexpr double kBenchLoad = 100.0;               // ohm

struct BoostParams {
  double v_diode = 0.0;     // V
  double r_switch = 0.0;    // ohm
  double r_inductor = 0.0;  // ohm
  double p_fixed = 0.0;     // W
  // Core loss coefficient, W/V^2, applied to the inductor volt-second swing (vin * duty)^2.
  double k_core = 0.0;
  double f_sw = kSwitchingFrequency;
  int duty_steps = kDefaultDutySteps;
};

inline void validate(const BoostParams& p) {
  if (p.r_switch < 0.0 || p.r_inductor < 0.0) throw std::invalid_argument("boost resistances must be >= 0");
  if (p.v_diode < 0.0 || p.v_diode > 1.2) throw std::invalid_argument("v_diode must lie in [0, 1.2]");
  if (p.p_fixed < 0.0 || p.k_core < 0.0) throw std::invalid_argument("fixed and core losses must be >= 0");
  if (!(p.f_sw > 0.0)) throw std::invalid_argument("f_sw must be > 0");
  if (p.duty_steps < 2) throw std::invalid_argument("duty_steps must be >= 2");
}

struct EfficiencyPoint {
  double vin = 0.0;
  double eta = 0.0;
};

// Measured efficiency versus input voltage, linearly interpolated and
// clamped to the end points.
class EmpiricalTable {
public:
  EmpiricalTable() = default;
  explicit EmpiricalTable(std::vector<EfficiencyPoint> points, int duty_steps = kDefaultDutySteps)
      : points_(std::move(points)), duty_steps_(duty_steps) {
    if (points_.empty()) throw std::invalid_argument("empirical table is empty");
    for (std::size_t k = 0; k < points_.size(); ++k) {
      const auto& pt = points_[k];
      if (!(pt.eta > 0.0 && pt.eta <= 1.0)) throw std::invalid_argument("table efficiency outside (0, 1]");
      if (k > 0 && !(pt.vin > points_[k - 1].vin)) {
        throw std::invalid_argument("table vin must be strictly increasing");
      }
    }
    if (duty_steps_ < 2) throw std::invalid_argument("duty_steps must be >= 2");
  }

  double eta_at(double vin) const {
    if (vin <= points_.front().vin) return points_.front().eta;
    if (vin >= points_.back().vin) return points_.back().eta;
    auto hi = std::upper_bound(points_.begin(), points_.end(), vin,
                               [](double v, const EfficiencyPoint& pt) { return v < pt.vin; });
    auto lo = std::prev(hi);
    if (vin == lo->vin) return lo->eta;
    const double w = (vin - lo->vin) / (hi->vin - lo->vin);
    return lo->eta + w * (hi->eta - lo->eta);
  }

  const std::vector<EfficiencyPoint>& points() const { return points_; }
  int duty_steps() const { return duty_steps_; }

private:
  std::vector<EfficiencyPoint> points_;
  int duty_steps_ = kDefaultDutySteps;
};

struct LossModel {
  std::variant<BoostParams, EmpiricalTable> variant;

  static LossModel analytic(const BoostParams& p) {
    validate(p);
    return {p};
  }
  static LossModel empirical(EmpiricalTable table) { return {std::move(table)}; }

  bool is_analytic() const { return std::holds_alternative<BoostParams>(variant); }
  int duty_steps() const {
    return is_analytic() ? std::get<BoostParams>(variant).duty_steps
                         : std::get<EmpiricalTable>(variant).duty_steps();
  }
};

struct ConverterSolution {
  double vout = 0.0;
  double p_in = 0.0;
  double p_out = 0.0;
  double eta = 0.0;
};

// Bench measurement row: input voltage, input and output power, and
// optionally the efficiency as published (percent).
struct BenchRow {
  double vin = 0.0;
  double p_in = 0.0;
  double p_out = 0.0;
  std::optional<double> eta_pct;

  double eta() const { return eta_pct ? *eta_pct / 100.0 : p_out / p_in; }
};

// Transfer efficiency of the boost converter through a 100 ohm load.
inline std::vector<BenchRow> table2_rows() {
  return {
      {10.0, 12.57, 11.97, 95.23}, {14.0, 13.23, 11.66, 88.13}, {18.0, 13.37, 11.17, 83.55},
      {22.0, 14.06, 11.95, 85.00}, {26.0, 13.83, 11.83, 85.54}, {33.0, 12.49, 11.52, 92.23},
      {35.0, 12.56, 12.05, 95.94},
  };
}

inline EmpiricalTable table_from_rows(std::span<const BenchRow> rows, int duty_steps = kDefaultDutySteps) {
  std::vector<EfficiencyPoint> pts;
  pts.reserve(rows.size());
  for (const auto& r : rows) pts.push_back({r.vin, r.eta()});
  return EmpiricalTable(std::move(pts), duty_steps);
}

inline LossModel default_loss_model() {
  const auto rows = table2_rows();
  return LossModel::empirical(table_from_rows(rows));
}

inline double ideal_vout(double vin, double duty) {
  if (!(duty >= 0.0 && duty <= kMaxDuty)) throw DutyOutOfRange(duty);
  return vin / (1.0 - duty);
}

namespace detail {

inline double input_power(double vin, double duty, double i_inductor, const BoostParams& p) {
  const double swing = vin * duty;
  return vin * i_inductor + p.p_fixed + p.k_core * swing * swing;
}

inline ConverterSolution solve_analytic(double vin, double duty, double r_load, const BoostParams& p) {
  const double u = 1.0 - duty;
  const double r_series = p.r_inductor + duty * p.r_switch;
  // Averaged inductor loop: vout = (vin - i_L r_series)/u - v_diode, i_L = vout/(r_load u).
  auto map = [&](double vout) { return (vin - vout / (r_load * u) * r_series) / u - p.v_diode; };
  const double relax = 1.0 / (1.0 + r_series / (r_load * u * u));

  double vout = vin / u;
  bool converged = false;
  for (int step = 0; step < 10'000; ++step) {
    const double next = vout + relax * (map(vout) - vout);
    const double delta = std::abs(next - vout);
    vout = next;
    if (delta < 1e-9) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NonConvergence("boost steady state did not converge in 10000 steps");
  if (!(vout > 0.0)) throw NonConvergence("boost converter has no positive steady state at this duty");

  ConverterSolution s;
  s.vout = vout;
  s.p_out = vout * vout / r_load;
  s.p_in = input_power(vin, duty, vout / (r_load * u), p);
  s.eta = s.p_out / s.p_in;
  return s;
}

}  // namespace detail

inline ConverterSolution solve_steady_state(double vin, double duty, double r_load, const LossModel& model) {
  if (!(vin > 0.0)) throw std::invalid_argument("vin must be > 0");
  if (!(r_load > 0.0)) throw std::invalid_argument("r_load must be > 0");
  if (!(duty >= 0.0 && duty <= kMaxDuty)) throw DutyOutOfRange(duty);

  if (const auto* p = std::get_if<BoostParams>(&model.variant)) {
    return detail::solve_analytic(vin, duty, r_load, *p);
  }
  const auto& table = std::get<EmpiricalTable>(model.variant);
  ConverterSolution s;
  s.vout = ideal_vout(vin, duty);
  s.p_out = s.vout * s.vout / r_load;
  s.eta = table.eta_at(vin);
  s.p_in = s.p_out / s.eta;
  return s;
}

// Efficiency of the analytic model when regulated to `vout` into `r_load`.
// Solves the averaged loop for the duty directly; nullopt past the collapse knee.
inline std::optional<double> regulated_efficiency(double vin, double vout, double r_load, const BoostParams& p) {
  const double i_out = vout / r_load;
  const double qa = vout + p.v_diode;
  const double qb = vin + i_out * p.r_switch;
  const double qc = i_out * (p.r_inductor + p.r_switch);
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return std::nullopt;
  const double u = (qb + std::sqrt(disc)) / (2.0 * qa);
  if (!(u > 0.0)) return std::nullopt;
  const double duty = std::clamp(1.0 - u, 0.0, 1.0);
  return vout * i_out / detail::input_power(vin, duty, i_out / u, p);
}

struct FitReport {
  BoostParams params;
  std::vector<double> residual_pp;  // model minus measured, percentage points
  double mean_abs_error_pp = 0.0;
  double rms_error_pp = 0.0;
  int iterations = 0;
};

namespace detail {

inline constexpr std::size_t kFitDims = 5;
using FitVector = Eigen::Matrix<double, kFitDims, 1>;

inline BoostParams params_from(const FitVector& x, const BoostParams& base) {
  BoostParams p = base;
  p.v_diode = x(0);
  p.r_switch = x(1);
  p.r_inductor = x(2);
  p.p_fixed = x(3);
  p.k_core = x(4);
  return p;
}

inline FitVector clamp_to_bounds(FitVector x) {
  static const FitVector upper = (FitVector() << 1.2, 10.0, 10.0, 10.0, 1.0).finished();
  for (std::size_t k = 0; k < kFitDims; ++k) x(k) = std::clamp(x(k), 0.0, upper(k));
  return x;
}

}  // namespace detail

// Bounded Levenberg-Marquardt fit of (v_diode, r_switch, r_inductor, p_fixed,
// k_core) minimizing squared efficiency error over the rows. Each row is
// evaluated at its own measured output voltage sqrt(p_out * r_load).
inline FitReport fit_analytic_params(std::span<const BenchRow> rows, double r_load = kBenchLoad,
                                     const BoostParams& base = {}) {
  std::vector<double> distinct;
  for (const auto& r : rows) {
    if (!(r.vin > 0.0 && r.p_in > 0.0 && r.p_out > 0.0)) throw std::invalid_argument("bench rows must be positive");
    if (std::find(distinct.begin(), distinct.end(), r.vin) == distinct.end()) distinct.push_back(r.vin);
  }
  if (distinct.size() < 3) throw SingularFit("at least three distinct input voltages are required");

  using detail::FitVector;
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());

  auto residuals = [&](const FitVector& x) {
    const BoostParams p = detail::params_from(x, base);
    Eigen::VectorXd r(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto& row = rows[static_cast<std::size_t>(k)];
      const double vout = std::sqrt(row.p_out * r_load);
      r(k) = regulated_efficiency(row.vin, vout, r_load, p).value_or(0.0) - row.eta();
    }
    return r;
  };

  auto run = [&](FitVector x, int& iterations) {
    Eigen::VectorXd r = residuals(x);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    for (int it = 0; it < 400; ++it) {
      ++iterations;
      Eigen::MatrixXd jac(m, static_cast<Eigen::Index>(detail::kFitDims));
      for (std::size_t j = 0; j < detail::kFitDims; ++j) {
        FitVector xp = x;
        const double h = 1e-7 * std::max(1.0, std::abs(x(j)));
        xp(j) += h;
        jac.col(static_cast<Eigen::Index>(j)) = (residuals(xp) - r) / h;
      }
      const Eigen::MatrixXd jtj = jac.transpose() * jac;
      const Eigen::VectorXd grad = jac.transpose() * r;
      bool improved = false;
      for (int tries = 0; tries < 30 && !improved; ++tries) {
        Eigen::MatrixXd damped = jtj;
        for (Eigen::Index d = 0; d < damped.rows(); ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
        const FitVector step = damped.ldlt().solve(-grad);
        const FitVector trial = detail::clamp_to_bounds(x + step);
        const Eigen::VectorXd rt = residuals(trial);
        const double ct = rt.squaredNorm();
        if (ct < cost) {
          const double gain = cost - ct;
          x = trial;
          r = rt;
          cost = ct;
          lambda = std::max(lambda / 3.0, 1e-12);
          improved = true;
          if (gain < 1e-18) return std::pair{x, cost};
        } else {
          lambda *= 4.0;
        }
      }
      if (!improved) break;
    }
    return std::pair{x, cost};
  };

  static const std::array<FitVector, 6> starts = {
      (FitVector() << 0.5, 0.1, 0.1, 0.5, 0.005).finished(),
      (FitVector() << 0.2, 0.5, 0.5, 0.2, 0.01).finished(),
      (FitVector() << 1.0, 0.05, 0.05, 1.0, 0.02).finished(),
      (FitVector() << 0.7, 1.0, 1.0, 0.1, 0.001).finished(),
      (FitVector() << 0.05, 0.05, 0.05, 0.05, 0.0).finished(),
      (FitVector() << 0.9, 0.3, 0.2, 0.3, 0.015).finished(),
  };

  FitReport report;
  double best = std::numeric_limits<double>::infinity();
  FitVector best_x = FitVector::Zero();
  for (const auto& s : starts) {
    auto [x, cost] = run(s, report.iterations);
    if (cost < best) {
      best = cost;
      best_x = x;
    }
  }
  if (!std::isfinite(best)) throw SingularFit("fit did not produce a finite residual");

  report.params = detail::params_from(best_x, base);
  const Eigen::VectorXd r = residuals(best_x);
  double abs_sum = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    report.residual_pp.push_back(100.0 * r(k));
    abs_sum += std::abs(100.0 * r(k));
  }
  report.mean_abs_error_pp = abs_sum / static_cast<double>(m);
  report.rms_error_pp = 100.0 * std::sqrt(r.squaredNorm() / static_cast<double>(m));
  return report;
}

struct Regulation {
  int step = 0;  // duty = step / duty_steps
  double duty = 0.0;
  double vout = 0.0;
  int iterations = 0;
  ConverterSolution solution;
};

// PWM regulation loop: moves the quantized duty one step at a time toward
// the output voltage closest to `target`. `start_step` warm-starts the loop.
inline Regulation regulate(double vin, double target, double r_load, const LossModel& model, int start_step = 0) {
  if (!(vin > 0.0 && vin <= target)) throw std::invalid_argument("regulate requires 0 < vin <= target");
  const int steps = model.duty_steps();
  const int max_step = static_cast<int>(std::floor(kMaxDuty * steps + 1e-9));

  auto evaluate = [&](int k) -> std::optional<ConverterSolution> {
    try {
      return solve_steady_state(vin, static_cast<double>(k) / steps, r_load, model);
    } catch (const NonConvergence&) {
      return std::nullopt;
    }
  };
  auto error_of = [&](const std::optional<ConverterSolution>& s) {
    return s ? std::abs(s->vout - target) : std::numeric_limits<double>::infinity();
  };

  Regulation out;
  if (vin == target) {
    out.solution = solve_steady_state(vin, 0.0, r_load, model);
    out.vout = out.solution.vout;
    return out;
  }

  int k = std::clamp(start_step, 0, max_step);
  auto current = evaluate(k);
  double err = error_of(current);
  for (int it = 0; it < 4 * steps; ++it) {
    std::optional<ConverterSolution> up, down;
    double e_up = std::numeric_limits<double>::infinity();
    double e_down = e_up;
    if (k < max_step) e_up = error_of(up = evaluate(k + 1));
    if (k > 0) e_down = error_of(down = evaluate(k - 1));
    if (e_up < err && e_up <= e_down) {
      ++k;
      current = up;
      err = e_up;
    } else if (e_down < err) {
      --k;
      current = down;
      err = e_down;
    } else {
      break;
    }
    ++out.iterations;
  }

  if (!current || err > 2.0) {
    throw Unreachable("no quantized duty brings vout within 2 V of " + std::to_string(target) + " V from vin " +
                      std::to_string(vin) + " V");
  }
  out.step = k;
  out.duty = static_cast<double>(k) / steps;
  out.solution = *current;
  out.vout = current->vout;
  return out;
}

}  // namespace pvpms
