#include "jetleg/approx.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

namespace jetleg::approx {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw DimensionMismatch(what);
}

Eigen::MatrixXd apply_act(Activation a, const Eigen::MatrixXd& z) {
  if (a == Activation::Tanh) return z.array().tanh();
  return z.array().max(0.0);
}

// phi'(z) expressed through the activation value where convenient.
Eigen::MatrixXd act_deriv(Activation a, const Eigen::MatrixXd& z,
                          const Eigen::MatrixXd& act) {
  if (a == Activation::Tanh) return 1.0 - act.array().square();
  return (z.array() > 0.0).cast<double>();
}

// Orthogonal matrix via QR of a Gaussian draw, sign-fixed on the diagonal.
Eigen::MatrixXd orthogonal(int rows, int cols, std::mt19937_64& rng, double gain) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  Eigen::MatrixXd out = (rows >= cols) ? q : Eigen::MatrixXd(q.transpose());
  return gain * out;
}

}  // namespace

Mlp Mlp::make(const std::vector<int>& widths, Activation hidden, uint64_t seed,
              double output_gain) {
  check(widths.size() >= 2, "Mlp needs at least input and output widths");
  std::mt19937_64 rng(seed);
  Mlp net;
  net.hidden = hidden;
  for (size_t k = 0; k + 1 < widths.size(); ++k) {
    const bool last = (k + 2 == widths.size());
    const double gain = last ? output_gain : 1.0;
    net.w.push_back(orthogonal(widths[k + 1], widths[k], rng, gain));
    net.b.push_back(Eigen::VectorXd::Zero(widths[k + 1]));
  }
  return net;
}

std::vector<int> Mlp::widths() const {
  std::vector<int> ws;
  ws.push_back(input_dim());
  for (const auto& m : w) ws.push_back(static_cast<int>(m.rows()));
  return ws;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  return forward(Eigen::MatrixXd(x.transpose())).row(0).transpose();
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  check(x.cols() == input_dim(), "Mlp::forward input dim");
  Eigen::MatrixXd a = x;
  for (size_t k = 0; k < w.size(); ++k) {
    Eigen::MatrixXd z = (a * w[k].transpose()).rowwise() + b[k].transpose();
    a = (k + 1 < w.size()) ? apply_act(hidden, z) : std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_trace(const Eigen::MatrixXd& x, Trace& trace) const {
  check(x.cols() == input_dim(), "Mlp::forward_trace input dim");
  trace.pre.clear();
  trace.act.clear();
  trace.act.push_back(x);
  for (size_t k = 0; k < w.size(); ++k) {
    Eigen::MatrixXd z = (trace.act.back() * w[k].transpose()).rowwise() + b[k].transpose();
    trace.pre.push_back(z);
    trace.act.push_back(k + 1 < w.size() ? apply_act(hidden, z) : z);
  }
  return trace.act.back();
}

Mlp::Gradients Mlp::Gradients::zeros_like(const Mlp& net) {
  Gradients g;
  for (size_t k = 0; k < net.w.size(); ++k) {
    g.w.push_back(Eigen::MatrixXd::Zero(net.w[k].rows(), net.w[k].cols()));
    g.b.push_back(Eigen::VectorXd::Zero(net.b[k].size()));
  }
  return g;
}

void Mlp::Gradients::scale(double s) {
  for (auto& m : w) m *= s;
  for (auto& v : b) v *= s;
}

Eigen::MatrixXd Mlp::backward(const Trace& trace, const Eigen::MatrixXd& upstream,
                              Gradients& grads) const {
  const size_t layers = w.size();
  check(trace.pre.size() == layers, "Mlp::backward trace mismatch");
  check(upstream.cols() == output_dim(), "Mlp::backward upstream dim");
  check(upstream.rows() == trace.act[0].rows(), "Mlp::backward batch size");

  Eigen::MatrixXd g = upstream;  // dL/dz_L (identity output)
  for (size_t k = layers; k-- > 0;) {
    grads.w[k] += g.transpose() * trace.act[k];
    grads.b[k] += g.colwise().sum().transpose();
    Eigen::MatrixXd da = g * w[k];
    if (k == 0) return da;
    g = da.array() * act_deriv(hidden, trace.pre[k - 1], trace.act[k]).array();
  }
  return {};
}

Eigen::VectorXd Mlp::input_gradient(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& upstream) const {
  Trace tr;
  forward_trace(Eigen::MatrixXd(x.transpose()), tr);
  Gradients g = Gradients::zeros_like(*this);  // small nets; cost acceptable
  Eigen::MatrixXd dx = backward(tr, Eigen::MatrixXd(upstream.transpose()), g);
  return dx.row(0).transpose();
}

// Reverse pass over the tangent-augmented forward graph:
//   s_0 = tangent,  zdot_k = W_k s_{k-1},  s_k = phi'(z_k) . zdot_k,
//   h = upstream . s_L.
// h equals the directional derivative (dy/dx . tangent) . upstream, and the
// adjoints below give dh/dW, dh/db including the dependence of phi'(z_k) on
// the parameters (needs phi'').
void Mlp::directional_param_gradient(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& tangent,
                                     const Eigen::VectorXd& upstream,
                                     double scale, Gradients& grads) const {
  check(x.size() == input_dim(), "directional_param_gradient input dim");
  check(tangent.size() == input_dim(), "directional_param_gradient tangent dim");
  check(upstream.size() == output_dim(), "directional_param_gradient upstream dim");
  const size_t layers = w.size();

  std::vector<Eigen::VectorXd> z(layers), a(layers + 1), zdot(layers), s(layers + 1);
  std::vector<Eigen::VectorXd> dphi(layers), ddphi(layers);
  a[0] = x;
  s[0] = tangent;
  for (size_t k = 0; k < layers; ++k) {
    z[k] = w[k] * a[k] + b[k];
    zdot[k] = w[k] * s[k];
    if (k + 1 < layers) {
      if (hidden == Activation::Tanh) {
        Eigen::ArrayXd t = z[k].array().tanh();
        a[k + 1] = t;
        dphi[k] = (1.0 - t.square()).matrix();
        ddphi[k] = (-2.0 * t * (1.0 - t.square())).matrix();
      } else {
        a[k + 1] = z[k].array().max(0.0);
        dphi[k] = (z[k].array() > 0.0).cast<double>().matrix();
        ddphi[k] = Eigen::VectorXd::Zero(z[k].size());
      }
    } else {
      a[k + 1] = z[k];
      dphi[k] = Eigen::VectorXd::Ones(z[k].size());
      ddphi[k] = Eigen::VectorXd::Zero(z[k].size());
    }
    s[k + 1] = dphi[k].cwiseProduct(zdot[k]);
  }

  // lambda_k = dh/ds_k, alpha_k = dh/da_k, both at layer outputs.
  Eigen::VectorXd lambda = scale * upstream;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(upstream.size());
  for (size_t k = layers; k-- > 0;) {
    Eigen::VectorXd beta = alpha.cwiseProduct(dphi[k]) +
                           lambda.cwiseProduct(zdot[k]).cwiseProduct(ddphi[k]);
    Eigen::VectorXd mu = lambda.cwiseProduct(dphi[k]);
    grads.w[k] += mu * s[k].transpose() + beta * a[k].transpose();
    grads.b[k] += beta;
    if (k == 0) break;
    lambda = w[k].transpose() * mu;
    alpha = w[k].transpose() * beta;
  }
}

size_t Mlp::param_count() const {
  size_t n = 0;
  for (size_t k = 0; k < w.size(); ++k) n += w[k].size() + b[k].size();
  return n;
}

Eigen::VectorXd Mlp::params_flat() const {
  Eigen::VectorXd p(param_count());
  Eigen::Index at = 0;
  for (size_t k = 0; k < w.size(); ++k) {
    p.segment(at, w[k].size()) = Eigen::Map<const Eigen::VectorXd>(w[k].data(), w[k].size());
    at += w[k].size();
    p.segment(at, b[k].size()) = b[k];
    at += b[k].size();
  }
  return p;
}

void Mlp::set_params_flat(const Eigen::VectorXd& p) {
  check(static_cast<size_t>(p.size()) == param_count(), "set_params_flat size");
  Eigen::Index at = 0;
  for (size_t k = 0; k < w.size(); ++k) {
    Eigen::Map<Eigen::VectorXd>(w[k].data(), w[k].size()) = p.segment(at, w[k].size());
    at += w[k].size();
    b[k] = p.segment(at, b[k].size());
    at += b[k].size();
  }
}

Eigen::VectorXd Mlp::grads_flat(const Gradients& g) {
  size_t n = 0;
  for (size_t k = 0; k < g.w.size(); ++k) n += g.w[k].size() + g.b[k].size();
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  for (size_t k = 0; k < g.w.size(); ++k) {
    out.segment(at, g.w[k].size()) =
        Eigen::Map<const Eigen::VectorXd>(g.w[k].data(), g.w[k].size());
    at += g.w[k].size();
    out.segment(at, g.b[k].size()) = g.b[k];
    at += g.b[k].size();
  }
  return out;
}

void Mlp::save(serial::Writer& wr) const {
  wr.u32(static_cast<uint32_t>(hidden));
  wr.u64(w.size());
  for (size_t k = 0; k < w.size(); ++k) {
    wr.mat(w[k]);
    wr.vec(b[k]);
  }
}

Mlp Mlp::load(serial::Reader& r) {
  Mlp net;
  net.hidden = static_cast<Activation>(r.u32());
  const uint64_t layers = r.u64();
  for (uint64_t k = 0; k < layers; ++k) {
    net.w.push_back(r.mat());
    net.b.push_back(r.vec());
  }
  return net;
}

bool Mlp::same_shape(const Mlp& other) const {
  if (w.size() != other.w.size() || hidden != other.hidden) return false;
  for (size_t k = 0; k < w.size(); ++k)
    if (w[k].rows() != other.w[k].rows() || w[k].cols() != other.w[k].cols())
      return false;
  return true;
}

void AdamState::apply(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (m.size() == 0) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
  }
  if (params.size() != grad.size() || params.size() != m.size())
    throw DimensionMismatch("AdamState::apply shape");
  ++step;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  params.array() -=
      lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

void AdamState::save(serial::Writer& w) const {
  w.f64(lr);
  w.f64(beta1);
  w.f64(beta2);
  w.f64(eps);
  w.i64(step);
  w.vec(m);
  w.vec(v);
}

AdamState AdamState::load(serial::Reader& r) {
  AdamState s;
  s.lr = r.f64();
  s.beta1 = r.f64();
  s.beta2 = r.f64();
  s.eps = r.f64();
  s.step = r.i64();
  s.m = r.vec();
  s.v = r.vec();
  return s;
}

RunningNormalizer::RunningNormalizer(int dim, double clip_range)
    : mean(Eigen::VectorXd::Zero(dim)), m2(Eigen::VectorXd::Zero(dim)), clip(clip_range) {}

void RunningNormalizer::update(const Eigen::MatrixXd& batch) {
  if (batch.cols() != mean.size()) throw DimensionMismatch("RunningNormalizer::update dim");
  const double n = static_cast<double>(batch.rows());
  if (n == 0) return;
  Eigen::VectorXd bmean = batch.colwise().mean();
  Eigen::VectorXd bm2 =
      (batch.rowwise() - bmean.transpose()).array().square().colwise().sum();
  if (count == 0.0) {
    mean = bmean;
    m2 = bm2;
    count = n;
    return;
  }
  const double total = count + n;
  Eigen::VectorXd delta = bmean - mean;
  mean += delta * (n / total);
  m2 += bm2 + delta.cwiseProduct(delta) * (count * n / total);
  count = total;
}

Eigen::VectorXd RunningNormalizer::stddev() const {
  if (count == 0.0) return Eigen::VectorXd::Ones(mean.size());
  return (m2 / count).cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-6);
}

Eigen::VectorXd RunningNormalizer::normalize(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) throw DimensionMismatch("RunningNormalizer::normalize dim");
  if (count == 0.0) return x.cwiseMin(clip).cwiseMax(-clip);
  Eigen::VectorXd z = (x - mean).cwiseQuotient(stddev());
  return z.cwiseMin(clip).cwiseMax(-clip);
}

Eigen::MatrixXd RunningNormalizer::normalize(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw DimensionMismatch("RunningNormalizer::normalize dim");
  if (count == 0.0) return x.cwiseMin(clip).cwiseMax(-clip);
  Eigen::ArrayXXd z = (x.rowwise() - mean.transpose()).array().rowwise() /
                      stddev().transpose().array();
  return z.min(clip).max(-clip).matrix();
}

void RunningNormalizer::save(serial::Writer& w) const {
  w.vec(mean);
  w.vec(m2);
  w.f64(count);
  w.f64(clip);
}

RunningNormalizer RunningNormalizer::load(serial::Reader& r) {
  RunningNormalizer n;
  n.mean = r.vec();
  n.m2 = r.vec();
  n.count = r.f64();
  n.clip = r.f64();
  return n;
}

}  // namespace jetleg::approx
