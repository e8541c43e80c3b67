#include "bdett/threshold.hpp"

#include <algorithm>
#include <cmath>

namespace bdett {

namespace {

constexpr double kMaxExpArg = 700.0;  // exp overflows ~709; clamp margin

double checked_exp(double arg, const char* where) {
  if (!std::isfinite(arg) || arg > kMaxExpArg || arg < -kMaxExpArg)
    throw NumericError(std::string(where) + ": exponent out of range");
  return std::exp(arg);
}

}  // namespace

void ThresholdSchemeConfig::validate() const {
  if (!(psi > 0.0)) throw ConfigError("scheme: psi must be > 0");
  if (!(c_decay > 0.0)) throw ConfigError("scheme: c must be > 0");
  if (!(range_coeff >= 0.0)) throw ConfigError("scheme: range_coeff must be >= 0");
  if (!std::isfinite(eta) || !std::isfinite(theta0))
    throw ConfigError("scheme: non-finite parameter");
}

double shifted_stat(std::span<const double> values, double range_coeff) {
  if (values.empty()) throw DomainError("shifted_stat: empty vector");
  double sum = 0.0, lo = values[0], hi = values[0];
  for (double x : values) {
    sum += x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return sum / static_cast<double>(values.size()) - range_coeff * (hi - lo);
}

LayerStats layer_stats(std::span<const double> v_prev,
                       std::span<const double> theta_prev, double range_coeff) {
  LayerStats s;
  s.shifted_mean_v = shifted_stat(v_prev, range_coeff);
  s.shifted_mean_theta = shifted_stat(theta_prev, range_coeff);
  double sum = 0.0;
  for (double t : theta_prev) sum += t;
  s.mean_theta = sum / static_cast<double>(theta_prev.size());
  return s;
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double det(double v, const LayerStats& stats, double eta, double psi) {
  const double d = v - stats.shifted_mean_v;
  return eta * d + stats.shifted_mean_theta + softplus(d / psi);
}

double det_dv(double v, const LayerStats& stats, double eta, double psi) {
  const double x = (v - stats.shifted_mean_v) / psi;
  const double sig = 1.0 / (1.0 + std::exp(-x));
  return eta + sig / psi;
}

double dtt(double v_now, double v_prev, double mean_theta_prev, double c_decay) {
  const double a = -std::exp(-std::abs(mean_theta_prev));
  return a + checked_exp(-(v_now - v_prev) / c_decay, "dtt");
}

double dtt_dnow(double v_now, double v_prev, double c_decay) {
  return -checked_exp(-(v_now - v_prev) / c_decay, "dtt_dnow") / c_decay;
}

Vec bdett_update(const Vec& v_now, const Vec& v_prev, const Vec& theta_prev,
                 const ThresholdSchemeConfig& cfg) {
  check_shape(v_now.size() == v_prev.size() && v_now.size() == theta_prev.size(),
              "bdett_update: mismatched layer vectors");
  if (v_now.empty()) throw DomainError("bdett_update: empty layer");
  if (cfg.kind == SchemeKind::Static) return theta_prev;
  if (cfg.kind == SchemeKind::FittedConstants)
    return fitted_constants_update(v_now, v_prev);

  const LayerStats stats = layer_stats(v_prev, theta_prev, cfg.range_coeff);
  Vec out(v_now.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (cfg.kind) {
      case SchemeKind::DetOnly:
        out[i] = det(v_prev[i], stats, cfg.eta, cfg.psi);
        break;
      case SchemeKind::DttOnly:
        out[i] = dtt(v_now[i], v_prev[i], stats.mean_theta, cfg.c_decay);
        break;
      default:
        out[i] = 0.5 * (det(v_prev[i], stats, cfg.eta, cfg.psi) +
                        dtt(v_now[i], v_prev[i], stats.mean_theta, cfg.c_decay));
        break;
    }
    check_finite(out[i], "bdett_update: non-finite threshold");
  }
  return out;
}

Vec fitted_constants_update(const Vec& v_now, const Vec& v_prev) {
  check_shape(v_now.size() == v_prev.size(),
              "fitted_constants_update: mismatched layer vectors");
  // Fixed constants stand in for the layer stats; the slope parameters keep
  // their usual values.
  constexpr double kVm = 3.0, kVtheta = 7.0, kEta = 0.01, kPsi = 4.0;
  Vec out(v_now.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = v_prev[i] - kVm;
    const double e_fit = kEta * d + kVtheta + softplus(d / kPsi);
    const double t_fit =
        1.0 + 10.0 * checked_exp(-(v_now[i] - v_prev[i]) / 3.0, "fitted dtt");
    out[i] = 0.5 * (e_fit + t_fit);
    check_finite(out[i], "fitted_constants_update: non-finite threshold");
  }
  return out;
}

ThresholdPartials threshold_partials(double v_now, double v_prev,
                                     const LayerStats& stats,
                                     const ThresholdSchemeConfig& cfg) {
  ThresholdPartials p;
  switch (cfg.kind) {
    case SchemeKind::Static:
      break;
    case SchemeKind::DetOnly:
      p.d_vprev = det_dv(v_prev, stats, cfg.eta, cfg.psi);
      break;
    case SchemeKind::DttOnly:
      p.d_vnow = dtt_dnow(v_now, v_prev, cfg.c_decay);
      p.d_vprev = -p.d_vnow;
      break;
    case SchemeKind::Bdett: {
      const double dt = dtt_dnow(v_now, v_prev, cfg.c_decay);
      p.d_vnow = 0.5 * dt;
      p.d_vprev = 0.5 * (det_dv(v_prev, stats, cfg.eta, cfg.psi) - dt);
      break;
    }
    case SchemeKind::FittedConstants: {
      LayerStats fixed{3.0, 7.0, 0.0};
      const double dt =
          -10.0 / 3.0 * checked_exp(-(v_now - v_prev) / 3.0, "fitted partials");
      p.d_vnow = 0.5 * dt;
      p.d_vprev = 0.5 * (det_dv(v_prev, fixed, 0.01, 4.0) - dt);
      break;
    }
  }
  return p;
}

}  // namespace bdett
