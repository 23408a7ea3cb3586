#pragma once

#include <Eigen/Core>
#include <random>
#include <string>
#include <vector>

#include "jetleg/errors.hpp"

namespace jetleg::jetdyn {

/// Parametric engine: polynomial steady-state thrust map and an affine
/// spool time constant, both in the throttle u in [u_min, 1].
struct JetParams {
  Eigen::VectorXd tss_coeffs = Eigen::VectorXd::Zero(4);  // ascending powers of u
  double tau0 = 0.30;  // tau(u) = tau0 + tau1 * u
  double tau1 = -0.10;
  double u_min = 0.15;
  double t_max = 250.0;

  double t_ss(double u) const;
  double tau(double u) const;
  /// Throws InvalidSpec when tau is not positive on [u_min, 1], t_ss is not
  /// monotone there, or t_ss(1) exceeds t_max.
  void validate() const;
};

/// Ideal mode: the command is a thrust rate (N/s), integrated and clamped.
double ideal_update(double t_prev, double u_rate, double dt, double t_max,
                    double rate_limit);

/// Forward-Euler step of dT/dt = (t_ss(u) - T) / tau(u); the throttle is
/// clamped into [u_min, 1] and the result into [0, t_max].
double lag_update(const JetParams& params, double t_prev, double u, double dt);

struct ThrottleLog {
  std::vector<double> time;
  std::vector<double> throttle;
  std::vector<double> thrust;
};

/// Integrates the lag model over a throttle profile and adds i.i.d. Gaussian
/// noise to the recorded thrust channel only.
ThrottleLog simulate_log(const JetParams& params,
                         const std::vector<double>& throttle, double dt,
                         double noise_std, std::mt19937_64& rng);

/// Model thrust obtained by integrating `params` over the log's throttle
/// profile from the log's first thrust sample.
std::vector<double> integrate_model(const JetParams& params,
                                    const ThrottleLog& log);

struct FitReport {
  JetParams params;
  double mae_n = 0.0;
  double rmse_n = 0.0;
};

/// Two-stage identification: algebraic least squares on the discrete lag
/// relation for the initial guess, then Levenberg-Marquardt on the
/// simulation (output) error. Throws RankDeficient when the throttle
/// profiles do not excite enough of the operating range.
FitReport fit(const std::vector<ThrottleLog>& logs, int tss_order = 3);

/// The shipped default engine: t_ss(0.15) = 40 N, t_ss(1) = 250 N,
/// tau in [0.15, 0.35] s.
JetParams calibrate_default();

/// Step levels plus a slow sweep; excites the full [u_min, 1] range.
std::vector<double> excitation_profile(const JetParams& params, double dt,
                                       double duration, uint64_t seed);

// three-column text files (time throttle thrust)
void write_log(const ThrottleLog& log, const std::string& path);
ThrottleLog read_log(const std::string& path);

}  // namespace jetleg::jetdyn
