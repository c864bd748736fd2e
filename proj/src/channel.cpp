#include "gcmopt/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "gcmopt/error.hpp"

namespace gcmopt {

namespace {

constexpr double kSpeedOfLight = 3.0e8;

// Pois(j; mean) for j in [lo, hi], anchored at the in-window point nearest the mode
// and extended outward, so underflow only hits negligible terms.
void poisson_window(double mean, long lo, long hi, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
  const long m = std::clamp(static_cast<long>(std::floor(mean)), lo, hi);
  const double md = static_cast<double>(m);
  out[m - lo] = std::exp(md * std::log(mean) - mean - std::lgamma(md + 1.0));
  for (long j = m + 1; j <= hi; ++j) out[j - lo] = out[j - 1 - lo] * mean / static_cast<double>(j);
  for (long j = m - 1; j >= lo; --j) out[j - lo] = out[j + 1 - lo] * static_cast<double>(j + 1) / mean;
}

// Pr(N > n) for N ~ Poisson(mean), summing only positive terms that shrink away from the start.
double poisson_tail_above(double mean, long n) {
  if (static_cast<double>(n + 1) >= mean) {
    long i = n + 1;
    double term = std::exp(static_cast<double>(i) * std::log(mean) - mean - std::lgamma(static_cast<double>(i) + 1.0));
    double sum = 0.0;
    while (term > 0.0) {
      sum += term;
      if (term < 1e-18 * sum) break;
      ++i;
      term *= mean / static_cast<double>(i);
    }
    return sum;
  }
  long i = n;
  double term = std::exp(static_cast<double>(i) * std::log(mean) - mean - std::lgamma(static_cast<double>(i) + 1.0));
  double cdf = 0.0;
  while (i >= 0 && term > 0.0) {
    cdf += term;
    if (term < 1e-18 * cdf) break;
    term *= static_cast<double>(i) / mean;
    --i;
  }
  return std::max(0.0, 1.0 - cdf);
}

// Pr(X <= 2 * half_x) for X noncentral chi-square, 2 dof, noncentrality 2 * half_nc:
//   sum_j Pois(j; half_nc) * Pr(Poisson(half_x) > j).
double noncentral_chi2_cdf(double half_nc, double half_x) {
  if (!(half_x > 0.0)) return 0.0;
  if (std::isinf(half_x)) return 1.0;
  if (half_nc <= 0.0) return -std::expm1(-half_x);

  const double spread = std::sqrt(half_nc);
  const long lo = std::max(0L, static_cast<long>(std::floor(half_nc - 9.0 * spread - 10.0)));
  const long hi = static_cast<long>(std::ceil(half_nc + 9.0 * spread + 10.0));

  thread_local std::vector<double> weights;
  thread_local std::vector<double> pmf;
  poisson_window(half_nc, lo, hi, weights);
  poisson_window(half_x, lo, hi, pmf);

  double tail = poisson_tail_above(half_x, hi);
  double acc = 0.0;
  for (long j = hi; j >= lo; --j) {
    acc += weights[j - lo] * tail;
    tail += pmf[j - lo];
  }
  return std::clamp(acc, 0.0, 1.0);
}

}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double ChannelParams::a1() const { return db_to_linear(k_min_db); }

double ChannelParams::a2() const {
  return std::log(db_to_linear(k_max_db) / db_to_linear(k_min_db)) / (std::numbers::pi / 2.0);
}

double ChannelParams::snr_threshold() const { return db_to_linear(snr_threshold_db); }

void ChannelParams::validate() const {
  if (!(outage_threshold > 0.0 && outage_threshold <= 1.0)) throw config_error("outage threshold must be in (0, 1]");
  if (!(carrier_ghz > 0.0)) throw config_error("carrier frequency must be positive");
  if (k_max_db < k_min_db) throw config_error("K_max must not be below K_min");
  if (!(abs_alt > gu_alt)) throw config_error("ABS altitude must exceed GU altitude");
  if (!(gu_alt >= 0.0)) throw config_error("GU altitude must be non-negative");
  if (!(uma.min_distance_3d > 0.0)) throw config_error("path-loss distance floor must be positive");
}

double uma_los_path_loss_db(const UmaConstants& c, double carrier_ghz, double d2d, double d3d, double h_bs,
                            double h_ut) {
  const double fc_hz = carrier_ghz * 1e9;
  const double breakpoint =
      std::max(0.0, 4.0 * (h_bs - c.effective_env_height) * (h_ut - c.effective_env_height) * fc_hz / kSpeedOfLight);
  const double freq_term = c.freq_slope * std::log10(carrier_ghz);
  if (d2d <= breakpoint) {
    return c.los_intercept + c.los_slope_near * std::log10(d3d) + freq_term;
  }
  const double dh = h_bs - h_ut;
  return c.los_intercept + c.los_slope_far * std::log10(d3d) + freq_term -
         c.los_breakpoint_coeff * std::log10(breakpoint * breakpoint + dh * dh);
}

double uma_nlos_path_loss_db(const UmaConstants& c, double carrier_ghz, double d2d, double d3d, double h_bs,
                             double h_ut) {
  const double nlos = c.nlos_intercept + c.nlos_slope * std::log10(d3d) + c.freq_slope * std::log10(carrier_ghz) -
                      c.nlos_height_coeff * (h_ut - c.nlos_height_ref);
  return std::max(uma_los_path_loss_db(c, carrier_ghz, d2d, d3d, h_bs, h_ut), nlos);
}

MeanGain mean_gain(const ChannelParams& params, bool los, Point3 abs_pos, Point3 gu_pos) {
  const double d2d = distance(horizontal(abs_pos), horizontal(gu_pos));
  double d3d = distance(abs_pos, gu_pos);
  MeanGain out;
  out.los = los;
  if (d3d < params.uma.min_distance_3d) {
    d3d = params.uma.min_distance_3d;
    out.clamped = true;
  }
  const double loss = los ? uma_los_path_loss_db(params.uma, params.carrier_ghz, d2d, d3d, abs_pos.z, gu_pos.z)
                          : uma_nlos_path_loss_db(params.uma, params.carrier_ghz, d2d, d3d, abs_pos.z, gu_pos.z);
  out.gain = db_to_linear(-loss);
  return out;
}

MeanGain mean_gain(const ChannelParams& params, const Environment& env, Point3 abs_pos, Point3 gu_pos) {
  return mean_gain(params, env.is_los(abs_pos, gu_pos), abs_pos, gu_pos);
}

double rician_k(const ChannelParams& params, Point3 abs_pos, Point3 gu_pos) {
  const double d2d = distance(horizontal(abs_pos), horizontal(gu_pos));
  const double theta = std::max(0.0, std::atan2(abs_pos.z - gu_pos.z, d2d));
  return params.a1() * std::exp(params.a2() * theta);
}

double snr(const ChannelParams& params, double gain) {
  return gain * db_to_linear(params.tx_power_dbm) / db_to_linear(params.noise_dbm);
}

double marcum_q1(double a, double b) {
  if (b <= 0.0) return 1.0;
  return std::clamp(1.0 - noncentral_chi2_cdf(0.5 * a * a, 0.5 * b * b), 0.0, 1.0);
}

double rician_power_cdf(double k, double x) { return noncentral_chi2_cdf(k, (k + 1.0) * x); }

double outage_probability(const ChannelParams& params, double mean_snr, double k) {
  if (!(mean_snr > 0.0)) return 1.0;
  return rician_power_cdf(k, params.snr_threshold() / mean_snr);
}

LinkReport evaluate_link(const ChannelParams& params, const Environment& env, Point3 abs_pos, Point3 gu_pos) {
  const MeanGain g = mean_gain(params, env, abs_pos, gu_pos);
  LinkReport r;
  r.los = g.los;
  r.clamped = g.clamped;
  r.gain = g.gain;
  r.k = g.los ? rician_k(params, abs_pos, gu_pos) : 0.0;
  r.mean_snr = snr(params, g.gain);
  r.outage = outage_probability(params, r.mean_snr, r.k);
  r.covered = params.outage_threshold >= 1.0 || r.outage < params.outage_threshold;
  return r;
}

bool is_covered(const ChannelParams& params, const Environment& env, Point3 abs_pos, Point3 gu_pos) {
  if (params.outage_threshold >= 1.0) return true;
  return evaluate_link(params, env, abs_pos, gu_pos).covered;
}

}  // namespace gcmopt
