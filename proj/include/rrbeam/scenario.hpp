#pragma once

// Network geometry, ULA steering vectors, LoS channels, the estimated /
// error channel split and the data-rate constants.
//
// Unit system throughout: meters, nanoseconds, gigahertz, watts. With these
// units c = 0.299792458 m/ns and the Table-1 noise PSDs are 1 W/GHz, which
// keeps the Fisher-information numbers at sane magnitudes.

#include <vector>

#include "rrbeam/matkit.hpp"

namespace rrbeam {

inline constexpr double kLightSpeedMPerNs = 0.299792458;
// Reference bandwidth converting a PSD in W/GHz into a noise power in W.
inline constexpr double kNoiseRefBandwidthGHz = 1.0;

using CVec = std::vector<cplx>;

// conj(a)^T b
cplx cdot(const CVec& a, const CVec& b);
double cnorm_sq(const CVec& v);

struct Scenario {
  std::vector<Vec2> bs_positions;      // m
  Vec2 user_position;                  // m
  int n_antennas = 16;                 // N_B
  double carrier_frequency_ghz = 60.0; // f
  double element_spacing_m = 0.0;      // defaults to wavelength/2 when 0
  std::vector<cplx> channel_gains;     // h_i, one per BS
  double clock_bias_std_ns = 0.01;     // sigma_b
  double noise_psd_positioning = 1.0;  // N_p, W/GHz
  double noise_psd_comm = 1.0;         // N_c, W/GHz
  double effective_bandwidth_ghz = 0.125;  // W_eff
  double frame_ratio = 1.0;            // r = T_p / T_c
  double rate_threshold = 0.3;         // bps/Hz
  double outage_prob = 0.05;           // P_out
  double positioning_energy_factor = 1.0;  // optional multiplier on Xi

  int num_bs() const { return int(bs_positions.size()); }
  double wavelength_m() const { return kLightSpeedMPerNs / carrier_frequency_ghz; }
  double spacing_m() const {
    return element_spacing_m > 0.0 ? element_spacing_m : 0.5 * wavelength_m();
  }
  // Noise power in the rate expression: PSD times the reference bandwidth.
  double noise_power_comm() const { return noise_psd_comm * kNoiseRefBandwidthGHz; }
  // Xi = 4 pi^2 W_eff^2 / N_p, scaled by the optional energy factor.
  double xi() const;

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

// The 8-BS grid and user at [75, 75] m from the paper's numerical section,
// with the Table-1 parameters above.
Scenario default_scenario();

struct BeamformerSet {
  std::vector<CVec> vectors;  // w_i, sqrt(W) entries, one per BS
  int serving_index = 0;

  double total_power() const;
};

struct ChannelRealization {
  CVec g_hat;        // estimated channel
  CVec g_err;        // channel error
  double theta_hat;  // rad
  Vec2 u_hat;        // m
  Vec2 delta_u;      // m
};

// Entry k = (1/sqrt(N_B)) exp(j k (2 pi / lambda) spacing sin(theta)).
CVec steering_vector(double theta, int n_antennas, double wavelength, double spacing);
CVec steering_vector(const Scenario& sc, double theta);

// g = sqrt(N_B) rho h a(theta) with rho = lambda / (4 pi d), theta the AOD
// from the BS toward `position`.
CVec los_channel(const Scenario& sc, int bs_index, Vec2 position);

struct GeometryDerivatives {
  Vec2 alpha;      // (1/c) (u - p)/||u - p||, s/m entries
  double tau_los;  // ||u - p|| / c, ns (clock bias excluded)
};
GeometryDerivatives geometry_derivatives(Vec2 u, Vec2 p, double c = kLightSpeedMPerNs);

// asin of the e_y component of the unit direction from p toward u_hat.
double estimated_angle(Vec2 u_hat, Vec2 p);

ChannelRealization channel_split(const Scenario& sc, int bs_index, Vec2 u_hat, Vec2 delta_u);

// (1/(1+r)) log2(1 + |g^H w|^2 / noise_power).
double achievable_rate(const CVec& g_true, const CVec& w, const Scenario& sc);

// gamma = lambda^2 N_B |h|^2 / ((4 pi)^2 Nc (2^{(1+r) Rbar} - 1)), the
// squared-distance budget per unit beam gain in the rate constraint.
double rate_gamma(const Scenario& sc, cplx h);

// Nearest BS by estimated distance; ties break to the lowest index.
int serving_bs(const Scenario& sc, Vec2 u_hat);

}  // namespace rrbeam
