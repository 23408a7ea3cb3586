#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "jetleg/errors.hpp"
#include "jetleg/serial.hpp"

namespace jetleg::approx {

enum class Activation { Tanh, Relu };

/// Fully-connected network, 64-bit floats, identity output layer.
/// Weights are stored (out x in); batched calls treat rows as samples.
struct Mlp {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  Activation hidden = Activation::Tanh;

  /// Orthogonal init with the given gain on the output layer (1.0 on hidden).
  static Mlp make(const std::vector<int>& widths, Activation hidden,
                  uint64_t seed, double output_gain = 1.0);

  int input_dim() const { return static_cast<int>(w.front().cols()); }
  int output_dim() const { return static_cast<int>(w.back().rows()); }
  size_t layer_count() const { return w.size(); }
  std::vector<int> widths() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  /// Per-layer pre-activations and activations kept for the reverse pass.
  struct Trace {
    std::vector<Eigen::MatrixXd> pre;  // z_k
    std::vector<Eigen::MatrixXd> act;  // act[0] = input, act[k] = phi(z_k)
  };
  Eigen::MatrixXd forward_trace(const Eigen::MatrixXd& x, Trace& trace) const;

  struct Gradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    static Gradients zeros_like(const Mlp& net);
    void scale(double s);
  };

  /// Reverse pass. `upstream` is dL/dy per sample (rows). Parameter
  /// gradients are summed over the batch into `grads`; the return value is
  /// dL/dx per sample.
  Eigen::MatrixXd backward(const Trace& trace, const Eigen::MatrixXd& upstream,
                           Gradients& grads) const;

  /// dL/dx only (no parameter gradients), single sample.
  Eigen::VectorXd input_gradient(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& upstream) const;

  /// Accumulates scale * d/dparams [ tangent . dy/dx(x)^T . upstream ] into
  /// `grads` — the parameter gradient of a directional input derivative.
  /// With tangent = 2 * dD/dx and upstream = 1 this is the gradient of the
  /// squared-input-gradient penalty ||dD/dx||^2 at x.
  void directional_param_gradient(const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& tangent,
                                  const Eigen::VectorXd& upstream, double scale,
                                  Gradients& grads) const;

  size_t param_count() const;
  Eigen::VectorXd params_flat() const;
  void set_params_flat(const Eigen::VectorXd& p);
  static Eigen::VectorXd grads_flat(const Gradients& g);

  void save(serial::Writer& w) const;
  static Mlp load(serial::Reader& r);

  bool same_shape(const Mlp& other) const;
};

/// Adam over a flat parameter vector, bias-corrected.
struct AdamState {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  Eigen::VectorXd m, v;

  void apply(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  void save(serial::Writer& w) const;
  static AdamState load(serial::Reader& r);
};

/// Streaming per-dimension mean/variance (Chan et al. merge) with clipping.
struct RunningNormalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;  // sum of squared deviations
  double count = 0.0;
  double clip = 10.0;

  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim, double clip_range = 10.0);

  int dim() const { return static_cast<int>(mean.size()); }
  void update(const Eigen::MatrixXd& batch);  // rows = samples
  Eigen::VectorXd stddev() const;             // 1 before any update; floor 1e-6
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& x) const;

  void save(serial::Writer& w) const;
  static RunningNormalizer load(serial::Reader& r);
};

}  // namespace jetleg::approx
