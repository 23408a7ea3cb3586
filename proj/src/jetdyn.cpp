#include "jetleg/jetdyn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace jetleg::jetdyn {

double JetParams::t_ss(double u) const {
  double acc = 0.0;
  for (Eigen::Index k = tss_coeffs.size() - 1; k >= 0; --k)
    acc = acc * u + tss_coeffs(k);
  return acc;
}

double JetParams::tau(double u) const { return tau0 + tau1 * u; }

void JetParams::validate() const {
  const int probes = 64;
  double prev = t_ss(u_min);
  for (int i = 0; i <= probes; ++i) {
    const double u = u_min + (1.0 - u_min) * i / probes;
    if (tau(u) <= 0.0) throw InvalidSpec("tau(u) must be positive on [u_min, 1]");
    const double t = t_ss(u);
    if (t < prev - 1e-9) throw InvalidSpec("t_ss(u) must be non-decreasing");
    prev = t;
  }
  if (t_ss(1.0) > t_max + 1e-9) throw InvalidSpec("t_ss(1) exceeds t_max");
}

double ideal_update(double t_prev, double u_rate, double dt, double t_max,
                    double rate_limit) {
  if (dt <= 0.0) throw InvalidSpec("ideal_update dt must be > 0");
  const double rate = std::clamp(u_rate, -rate_limit, rate_limit);
  return std::clamp(t_prev + rate * dt, 0.0, t_max);
}

double lag_update(const JetParams& params, double t_prev, double u, double dt) {
  if (dt <= 0.0) throw InvalidSpec("lag_update dt must be > 0");
  const double uc = std::clamp(u, params.u_min, 1.0);
  const double rate = (params.t_ss(uc) - t_prev) / params.tau(uc);
  return std::clamp(t_prev + rate * dt, 0.0, params.t_max);
}

ThrottleLog simulate_log(const JetParams& params,
                         const std::vector<double>& throttle, double dt,
                         double noise_std, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  ThrottleLog log;
  log.time.reserve(throttle.size());
  log.throttle.reserve(throttle.size());
  log.thrust.reserve(throttle.size());
  double t_state = params.t_ss(std::clamp(throttle.empty() ? params.u_min
                                                           : throttle.front(),
                                          params.u_min, 1.0));
  for (size_t k = 0; k < throttle.size(); ++k) {
    log.time.push_back(static_cast<double>(k) * dt);
    log.throttle.push_back(throttle[k]);
    const double measured =
        noise_std > 0.0 ? t_state + noise_std * noise(rng) : t_state;
    log.thrust.push_back(measured);
    t_state = lag_update(params, t_state, throttle[k], dt);
  }
  return log;
}

std::vector<double> integrate_model(const JetParams& params,
                                    const ThrottleLog& log) {
  std::vector<double> out(log.thrust.size());
  if (out.empty()) return out;
  double t_state = log.thrust.front();
  for (size_t k = 0; k < log.thrust.size(); ++k) {
    out[k] = t_state;
    if (k + 1 < log.thrust.size()) {
      const double dt = log.time[k + 1] - log.time[k];
      t_state = lag_update(params, t_state, log.throttle[k], dt);
    }
  }
  return out;
}

namespace {

Eigen::VectorXd pack(const JetParams& p) {
  Eigen::VectorXd x(p.tss_coeffs.size() + 2);
  x.head(p.tss_coeffs.size()) = p.tss_coeffs;
  x(p.tss_coeffs.size()) = p.tau0;
  x(p.tss_coeffs.size() + 1) = p.tau1;
  return x;
}

JetParams unpack(const Eigen::VectorXd& x, const JetParams& like) {
  JetParams p = like;
  p.tss_coeffs = x.head(x.size() - 2);
  p.tau0 = x(x.size() - 2);
  p.tau1 = x(x.size() - 1);
  return p;
}

Eigen::VectorXd residuals(const JetParams& p, const std::vector<ThrottleLog>& logs) {
  size_t n = 0;
  for (const auto& log : logs) n += log.thrust.size();
  Eigen::VectorXd r(n);
  Eigen::Index at = 0;
  for (const auto& log : logs) {
    const auto sim = integrate_model(p, log);
    for (size_t k = 0; k < sim.size(); ++k) r(at++) = sim[k] - log.thrust[k];
  }
  return r;
}

}  // namespace

FitReport fit(const std::vector<ThrottleLog>& logs, int tss_order) {
  size_t samples = 0;
  for (const auto& log : logs) {
    if (log.time.size() != log.throttle.size() ||
        log.time.size() != log.thrust.size())
      throw InvalidSpec("throttle log channel lengths differ");
    samples += log.thrust.size();
  }
  if (logs.empty() || samples < 100)
    throw InvalidSpec("fit needs at least one log with >= 100 samples");
  if (tss_order < 1 || tss_order > 6) throw InvalidSpec("tss order out of range");

  JetParams proto;
  proto.tss_coeffs = Eigen::VectorXd::Zero(tss_order + 1);
  const int n_params = tss_order + 3;

  // Stage 1: the discrete lag relation, multiplied through by tau(u), is
  // linear in the coefficients:
  //   sum_j c_j u^j - (dT/dt) tau0 - (dT/dt) u tau1 = T.
  size_t rows = 0;
  for (const auto& log : logs)
    if (log.thrust.size() >= 2) rows += log.thrust.size() - 1;
  Eigen::MatrixXd a(rows, n_params);
  Eigen::VectorXd y(rows);
  Eigen::Index at = 0;
  for (const auto& log : logs) {
    for (size_t k = 0; k + 1 < log.thrust.size(); ++k) {
      const double dt = log.time[k + 1] - log.time[k];
      if (dt <= 0.0) throw InvalidSpec("log timestamps must be increasing");
      const double u = std::clamp(log.throttle[k], proto.u_min, 1.0);
      const double dTdt = (log.thrust[k + 1] - log.thrust[k]) / dt;
      double up = 1.0;
      for (int j = 0; j <= tss_order; ++j) {
        a(at, j) = up;
        up *= u;
      }
      a(at, tss_order + 1) = -dTdt;
      a(at, tss_order + 2) = -dTdt * u;
      y(at) = log.thrust[k];
      ++at;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-8 * sv(0))
    throw RankDeficient(
        "throttle profile does not excite enough of the operating range");
  Eigen::VectorXd x = svd.solve(y);

  // Stage 2: Levenberg-Marquardt on the simulation error; robust to
  // measurement noise in the regressors of stage 1.
  JetParams p = unpack(x, proto);
  if (p.tau(p.u_min) <= 1e-3 || p.tau(1.0) <= 1e-3) {
    p.tau0 = 0.3;  // fall back to a sane spool guess; LM refines it
    p.tau1 = -0.1;
  }
  Eigen::VectorXd theta = pack(p);
  Eigen::VectorXd r = residuals(p, logs);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int iter = 0; iter < 60; ++iter) {
    Eigen::MatrixXd jac(r.size(), n_params);
    for (int j = 0; j < n_params; ++j) {
      const double h = std::max(1e-7, 1e-7 * std::abs(theta(j)));
      Eigen::VectorXd tp = theta, tm = theta;
      tp(j) += h;
      tm(j) -= h;
      jac.col(j) = (residuals(unpack(tp, proto), logs) -
                    residuals(unpack(tm, proto), logs)) /
                   (2.0 * h);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(jtr);
      const Eigen::VectorXd cand = theta - step;
      const JetParams pc = unpack(cand, proto);
      if (pc.tau(pc.u_min) <= 1e-4 || pc.tau(1.0) <= 1e-4) {
        lambda *= 4.0;
        continue;
      }
      const Eigen::VectorXd rc = residuals(pc, logs);
      if (rc.squaredNorm() < cost) {
        theta = cand;
        r = rc;
        cost = rc.squaredNorm();
        lambda = std::max(lambda * 0.3, 1e-10);
        improved = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved || cost < 1e-18 * static_cast<double>(r.size())) break;
  }

  FitReport report;
  report.params = unpack(theta, proto);
  report.rmse_n = std::sqrt(cost / static_cast<double>(r.size()));
  report.mae_n = r.cwiseAbs().mean();
  return report;
}

JetParams calibrate_default() {
  // t_ss expressed in w = (u - u_min) / (1 - u_min):
  //   40 + 210 (0.4 w + 0.25 w^2 + 0.35 w^3), monotone, 40 N at idle,
  //   250 N at full throttle. Expanded here to the power basis in u.
  JetParams p;
  const double u0 = p.u_min, span = 1.0 - p.u_min;
  const Eigen::Vector4d cw(40.0, 210.0 * 0.4, 210.0 * 0.25, 210.0 * 0.35);
  Eigen::Vector4d c = Eigen::Vector4d::Zero();
  // w^k = ((u - u0)/span)^k expanded via the binomial theorem
  const double binom[4][4] = {
      {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  for (int k = 0; k < 4; ++k) {
    const double scale = cw(k) / std::pow(span, k);
    for (int j = 0; j <= k; ++j)
      c(j) += scale * binom[k][j] * std::pow(-u0, k - j);
  }
  p.tss_coeffs = c;
  // tau: 0.35 s at idle falling to 0.15 s at full throttle
  p.tau1 = (0.15 - 0.35) / span;
  p.tau0 = 0.35 - p.tau1 * u0;
  p.validate();
  return p;
}

std::vector<double> excitation_profile(const JetParams& params, double dt,
                                       double duration, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(params.u_min, 1.0);
  std::uniform_real_distribution<double> hold(0.8, 2.0);
  const auto n = static_cast<size_t>(duration / dt);
  std::vector<double> u(n);
  // random step levels for the first two thirds, slow sweep for the rest
  const size_t sweep_from = 2 * n / 3;
  size_t k = 0;
  while (k < sweep_from) {
    const double lvl = level(rng);
    const auto len = static_cast<size_t>(hold(rng) / dt);
    for (size_t i = 0; i < len && k < sweep_from; ++i, ++k) u[k] = lvl;
  }
  for (; k < n; ++k) {
    const double s = static_cast<double>(k - sweep_from) /
                     static_cast<double>(n - sweep_from);
    u[k] = params.u_min + (1.0 - params.u_min) * s;
  }
  return u;
}

void write_log(const ThrottleLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out.precision(17);
  for (size_t k = 0; k < log.time.size(); ++k)
    out << log.time[k] << ' ' << log.throttle[k] << ' ' << log.thrust[k] << '\n';
}

ThrottleLog read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorruptFile("cannot open log: " + path);
  ThrottleLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    double t, u, f;
    if (!(row >> t >> u >> f)) throw CorruptFile("malformed log row: " + line);
    log.time.push_back(t);
    log.throttle.push_back(u);
    log.thrust.push_back(f);
  }
  if (log.time.size() < 2) throw CorruptFile("log too short: " + path);
  return log;
}

}  // namespace jetleg::jetdyn
