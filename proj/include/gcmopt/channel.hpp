#pragma once

#include "gcmopt/env.hpp"
#include "gcmopt/geometry.hpp"

namespace gcmopt {

/**
 * @brief 3GPP TR 38.901 UMa path-loss constants (Table 7.4.1-1), median values.
 *
 * Kept as data so the pinned model is visible in scenario files and can be swapped.
 */
struct UmaConstants {
  double los_intercept = 28.0;
  double los_slope_near = 22.0;   // PL1 distance slope
  double los_slope_far = 40.0;    // PL2 distance slope
  double los_breakpoint_coeff = 9.0;
  double freq_slope = 20.0;
  double nlos_intercept = 13.54;
  double nlos_slope = 39.08;
  double nlos_height_coeff = 0.6;
  double nlos_height_ref = 1.5;
  double effective_env_height = 1.0;  // h_E
  double min_distance_3d = 10.0;      // validity floor, meters

  friend bool operator==(const UmaConstants&, const UmaConstants&) = default;
};

struct ChannelParams {
  double tx_power_dbm = 5.0;
  double noise_dbm = -112.0;
  double carrier_ghz = 2.0;
  double k_min_db = 0.0;
  double k_max_db = 30.0;
  double snr_threshold_db = 3.0;
  double outage_threshold = 0.1;
  double abs_alt = 90.0;
  double gu_alt = 1.0;
  UmaConstants uma;

  /// Rician K at zero elevation.
  double a1() const;
  /// Elevation growth rate so that a1() * exp(a2() * pi/2) equals K_max.
  double a2() const;
  double snr_threshold() const;

  /// Throws a config Error on out-of-range values.
  void validate() const;

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

double db_to_linear(double db);
double linear_to_db(double linear);

double uma_los_path_loss_db(const UmaConstants& c, double carrier_ghz, double d2d, double d3d, double h_bs,
                            double h_ut);
double uma_nlos_path_loss_db(const UmaConstants& c, double carrier_ghz, double d2d, double d3d, double h_bs,
                             double h_ut);

struct MeanGain {
  double gain = 0.0;     // linear power gain
  bool los = false;
  bool clamped = false;  // 3D distance was raised to the validity floor
};

/// Average power gain for a link with known LoS state.
MeanGain mean_gain(const ChannelParams& params, bool los, Point3 abs_pos, Point3 gu_pos);
/// Average power gain with the LoS state taken from the environment.
MeanGain mean_gain(const ChannelParams& params, const Environment& env, Point3 abs_pos, Point3 gu_pos);

/// Elevation-dependent Rician factor (linear). Callers use 0 for NLoS links.
double rician_k(const ChannelParams& params, Point3 abs_pos, Point3 gu_pos);

/// Received SNR (linear) for a linear power gain.
double snr(const ChannelParams& params, double gain);

/**
 * @brief First-order Marcum Q function Q1(a, b).
 *
 * Evaluated through the Poisson mixture form of the 2-dof noncentral chi-square
 * distribution; absolute error below 1e-10.
 */
double marcum_q1(double a, double b);

/// Pr(xi < x) for unit-mean Rician power xi with factor k (k = 0 is Rayleigh).
double rician_power_cdf(double k, double x);

/// Pr(SNR < snr_threshold) for the given mean SNR (linear) and Rician factor.
double outage_probability(const ChannelParams& params, double mean_snr, double k);

struct LinkReport {
  bool los = false;
  bool clamped = false;
  double gain = 0.0;
  double k = 0.0;
  double mean_snr = 0.0;
  double outage = 1.0;
  bool covered = false;
};

LinkReport evaluate_link(const ChannelParams& params, const Environment& env, Point3 abs_pos, Point3 gu_pos);

/// Outage below the threshold; always true when the threshold is 1.
bool is_covered(const ChannelParams& params, const Environment& env, Point3 abs_pos, Point3 gu_pos);

}  // namespace gcmopt
