#include "rrbeam/scenario.hpp"

#include <cmath>

namespace rrbeam {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kCoincidenceTol = 1e-12;  // m
}  // namespace

cplx cdot(const CVec& a, const CVec& b) {
  cplx s(0.0, 0.0);
  for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double cnorm_sq(const CVec& v) {
  double s = 0.0;
  for (const cplx& x : v) s += std::norm(x);
  return s;
}

double Scenario::xi() const {
  return positioning_energy_factor * 4.0 * kPi * kPi * effective_bandwidth_ghz *
         effective_bandwidth_ghz / noise_psd_positioning;
}

void Scenario::validate() const {
  if (bs_positions.empty()) throw ConfigError("scenario: at least one BS required");
  if (n_antennas < 1) throw ConfigError("scenario: n_antennas must be >= 1");
  if (channel_gains.size() != bs_positions.size())
    throw ConfigError("scenario: one channel gain per BS required");
  if (!(outage_prob > 0.0 && outage_prob < 1.0))
    throw ConfigError("scenario: outage_prob must lie in (0, 1)");
  if (!(frame_ratio > 0.0)) throw ConfigError("scenario: frame_ratio must be > 0");
  if (!(carrier_frequency_ghz > 0.0)) throw ConfigError("scenario: carrier frequency must be > 0");
  if (!(noise_psd_positioning > 0.0) || !(noise_psd_comm > 0.0))
    throw ConfigError("scenario: noise PSDs must be > 0");
  if (!(effective_bandwidth_ghz > 0.0)) throw ConfigError("scenario: W_eff must be > 0");
  if (!(clock_bias_std_ns > 0.0)) throw ConfigError("scenario: sigma_b must be > 0");
  if (!(rate_threshold > 0.0)) throw ConfigError("scenario: rate threshold must be > 0");
  for (const Vec2& p : bs_positions)
    if ((p - user_position).norm() <= kCoincidenceTol)
      throw ConfigError("scenario: BS coincides with the user position");
}

Scenario default_scenario() {
  Scenario sc;
  sc.bs_positions = {{50, 50}, {75, 50}, {100, 50}, {50, 75},
                     {100, 75}, {50, 100}, {75, 100}, {100, 100}};
  sc.user_position = {75, 75};
  const cplx h = cplx(1.0, 1.0) / std::sqrt(2.0);
  sc.channel_gains.assign(sc.bs_positions.size(), h);
  return sc;
}

double BeamformerSet::total_power() const {
  double p = 0.0;
  for (const CVec& w : vectors) p += cnorm_sq(w);
  return p;
}

CVec steering_vector(double theta, int n_antennas, double wavelength, double spacing) {
  CVec a(n_antennas);
  const double scale = 1.0 / std::sqrt(double(n_antennas));
  const double phase_step = 2.0 * kPi / wavelength * spacing * std::sin(theta);
  for (int k = 0; k < n_antennas; ++k)
    a[k] = scale * std::polar(1.0, double(k) * phase_step);
  return a;
}

CVec steering_vector(const Scenario& sc, double theta) {
  return steering_vector(theta, sc.n_antennas, sc.wavelength_m(), sc.spacing_m());
}

CVec los_channel(const Scenario& sc, int bs_index, Vec2 position) {
  const Vec2 p = sc.bs_positions[bs_index];
  const double d = (position - p).norm();
  if (d <= kCoincidenceTol)
    throw DegenerateGeometry("los_channel: position coincides with the BS");
  const double rho = sc.wavelength_m() / (4.0 * kPi * d);
  const double theta = estimated_angle(position, p);
  CVec g = steering_vector(sc, theta);
  const cplx scale = std::sqrt(double(sc.n_antennas)) * rho * sc.channel_gains[bs_index];
  for (cplx& v : g) v *= scale;
  return g;
}

GeometryDerivatives geometry_derivatives(Vec2 u, Vec2 p, double c) {
  const Vec2 d = u - p;
  const double dist = d.norm();
  if (dist <= kCoincidenceTol)
    throw DegenerateGeometry("geometry_derivatives: coincident points");
  return {{d.x / (c * dist), d.y / (c * dist)}, dist / c};
}

double estimated_angle(Vec2 u_hat, Vec2 p) {
  const Vec2 d = u_hat - p;
  const double dist = d.norm();
  if (dist <= kCoincidenceTol) throw DegenerateGeometry("estimated_angle: coincident points");
  double s = d.y / dist;
  s = std::min(1.0, std::max(-1.0, s));
  return std::asin(s);
}

ChannelRealization channel_split(const Scenario& sc, int bs_index, Vec2 u_hat, Vec2 delta_u) {
  const Vec2 p = sc.bs_positions[bs_index];
  const double d_hat = (u_hat - p).norm();
  const double d_true = (u_hat + delta_u - p).norm();
  if (d_hat <= kCoincidenceTol || d_true <= kCoincidenceTol)
    throw DegenerateGeometry("channel_split: coincident points");

  ChannelRealization cr;
  cr.u_hat = u_hat;
  cr.delta_u = delta_u;
  cr.theta_hat = estimated_angle(u_hat, p);
  const CVec a_hat = steering_vector(sc, cr.theta_hat);
  const cplx scale = std::sqrt(double(sc.n_antennas)) * sc.wavelength_m() *
                     sc.channel_gains[bs_index] / (4.0 * kPi);
  cr.g_hat.resize(a_hat.size());
  cr.g_err.resize(a_hat.size());
  const double inv_d_hat = 1.0 / d_hat;
  const double diff = 1.0 / d_true - inv_d_hat;
  for (size_t k = 0; k < a_hat.size(); ++k) {
    cr.g_hat[k] = scale * inv_d_hat * a_hat[k];
    cr.g_err[k] = scale * diff * a_hat[k];
  }
  return cr;
}

double achievable_rate(const CVec& g_true, const CVec& w, const Scenario& sc) {
  const double signal = std::norm(cdot(g_true, w));
  const double prelog = 1.0 / (1.0 + sc.frame_ratio);
  return prelog * std::log2(1.0 + signal / sc.noise_power_comm());
}

double rate_gamma(const Scenario& sc, cplx h) {
  const double lambda = sc.wavelength_m();
  const double exponent = (1.0 + sc.frame_ratio) * sc.rate_threshold;
  const double snr_floor = std::exp2(exponent) - 1.0;
  return lambda * lambda * double(sc.n_antennas) * std::norm(h) /
         (16.0 * kPi * kPi * sc.noise_power_comm() * snr_floor);
}

int serving_bs(const Scenario& sc, Vec2 u_hat) {
  int best = 0;
  double best_d = (u_hat - sc.bs_positions[0]).norm();
  for (int i = 1; i < sc.num_bs(); ++i) {
    const double d = (u_hat - sc.bs_positions[i]).norm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace rrbeam
