#pragma once

#include <span>

#include "bdett/common.hpp"

namespace bdett {

enum class SchemeKind { Static, DetOnly, DttOnly, Bdett, FittedConstants };

// Parameters shared by all threshold schemes. Fields a given scheme does not
// use are simply ignored, so one config type serves every kind.
struct ThresholdSchemeConfig {
  SchemeKind kind = SchemeKind::Bdett;
  double eta = 0.01;        // shallow slope of the energy threshold
  double psi = 4.0;         // scale of the energy threshold's steep part
  double c_decay = 3.0;     // decay constant of the temporal threshold
  double theta0 = 0.5;      // initial threshold, also the static value
  double range_coeff = 0.2; // bias coefficient of the shifted layer means

  void validate() const;
};

// Layerwise statistical cues, computed from the previous timestep.
struct LayerStats {
  double shifted_mean_v = 0.0;     // shifted mean of membrane potentials
  double shifted_mean_theta = 0.0; // shifted mean of thresholds
  double mean_theta = 0.0;         // plain mean of thresholds
};

// mean(values) - range_coeff * (max - min). Throws DomainError on empty input.
double shifted_stat(std::span<const double> values, double range_coeff);

LayerStats layer_stats(std::span<const double> v_prev,
                       std::span<const double> theta_prev, double range_coeff);

// ln(1 + e^x), safe against overflow for any finite x.
double softplus(double x);

// Energy threshold of one neuron given its layer's stats.
double det(double v, const LayerStats& stats, double eta, double psi);
// d det / d v with stats held fixed: eta + sigmoid((v - V_m)/psi)/psi.
double det_dv(double v, const LayerStats& stats, double eta, double psi);

// Temporal threshold from the preceding depolarization rate.
double dtt(double v_now, double v_prev, double mean_theta_prev, double c_decay);
// d dtt / d v_now = -(1/C) e^{-(v_now - v_prev)/C}.
double dtt_dnow(double v_now, double v_prev, double c_decay);

// New per-neuron thresholds for one layer. Dispatches on cfg.kind:
// Static returns theta_prev, DetOnly/DttOnly return the lone component,
// Bdett averages both. Stats are always taken from (v_prev, theta_prev).
Vec bdett_update(const Vec& v_now, const Vec& v_prev, const Vec& theta_prev,
                 const ThresholdSchemeConfig& cfg);

// The ablation variant: layer statistics replaced by the fixed constants 3
// and 7, and the temporal part by 1 + 10 e^{-dv/3}.
Vec fitted_constants_update(const Vec& v_now, const Vec& v_prev);

// Partial derivatives of one neuron's next threshold w.r.t. its own
// potentials, with the layer stats frozen. Used by the trainer.
struct ThresholdPartials {
  double d_vnow = 0.0;
  double d_vprev = 0.0;
};
ThresholdPartials threshold_partials(double v_now, double v_prev,
                                     const LayerStats& stats,
                                     const ThresholdSchemeConfig& cfg);

}  // namespace bdett
