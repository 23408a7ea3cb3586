#include "jetleg/amp.hpp"

#include <cmath>

namespace jetleg::amp {

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, uint64_t seed)
    : cfg_(cfg), norm_(cfg.feature_dim) {
  std::vector<int> widths;
  widths.push_back(2 * cfg.feature_dim);
  for (int h : cfg.hidden) widths.push_back(h);
  widths.push_back(1);
  net_ = approx::Mlp::make(widths, approx::Activation::Tanh, seed);
  opt_.lr = cfg.lr;
}

void Discriminator::freeze_normalizer(const priors::MotionDataset& dataset) {
  norm_ = approx::RunningNormalizer(cfg_.feature_dim);
  norm_.update(priors::stack_frames(dataset));
}

Eigen::VectorXd Discriminator::normalized_input(const priors::FeatureFrame& a,
                                                const priors::FeatureFrame& b) const {
  Eigen::VectorXd in(2 * cfg_.feature_dim);
  in.head(cfg_.feature_dim) = norm_.normalize(Eigen::VectorXd(a));
  in.tail(cfg_.feature_dim) = norm_.normalize(Eigen::VectorXd(b));
  return in;
}

double Discriminator::logit(const priors::FeatureFrame& a,
                            const priors::FeatureFrame& b) const {
  return net_.forward(normalized_input(a, b))(0);
}

double Discriminator::style_reward(const priors::FeatureFrame& a,
                                   const priors::FeatureFrame& b) const {
  // -log(1 - sigmoid(D)) = softplus(D)
  return softplus(logit(a, b));
}

Discriminator::LossReport Discriminator::objective(
    std::span<const priors::TransitionPair> dataset_batch,
    std::span<const priors::TransitionPair> policy_batch,
    Eigen::VectorXd* grad_out) const {
  if (dataset_batch.empty() || policy_batch.empty())
    throw EmptyBatch("discriminator update needs non-empty batches");

  const auto nd = static_cast<double>(dataset_batch.size());
  const auto np = static_cast<double>(policy_batch.size());
  const int in_dim = 2 * cfg_.feature_dim;

  Eigen::MatrixXd xd(dataset_batch.size(), in_dim), xp(policy_batch.size(), in_dim);
  for (size_t i = 0; i < dataset_batch.size(); ++i)
    xd.row(i) = normalized_input(dataset_batch[i].first, dataset_batch[i].second);
  for (size_t i = 0; i < policy_batch.size(); ++i)
    xp.row(i) = normalized_input(policy_batch[i].first, policy_batch[i].second);

  approx::Mlp::Trace td, tp;
  const Eigen::VectorXd logit_d = net_.forward_trace(xd, td).col(0);
  const Eigen::VectorXd logit_p = net_.forward_trace(xp, tp).col(0);

  LossReport report;
  for (Eigen::Index i = 0; i < logit_d.size(); ++i)
    report.dataset_term += softplus(-logit_d(i)) / nd;  // -log sigma(D)
  for (Eigen::Index i = 0; i < logit_p.size(); ++i)
    report.policy_term += softplus(logit_p(i)) / np;    // -log(1 - sigma(D))

  auto grads = approx::Mlp::Gradients::zeros_like(net_);

  // BCE terms
  Eigen::MatrixXd up_d(logit_d.size(), 1), up_p(logit_p.size(), 1);
  for (Eigen::Index i = 0; i < logit_d.size(); ++i)
    up_d(i, 0) = (sigmoid(logit_d(i)) - 1.0) / nd;
  for (Eigen::Index i = 0; i < logit_p.size(); ++i)
    up_p(i, 0) = sigmoid(logit_p(i)) / np;
  const Eigen::MatrixXd input_grad_d = net_.backward(td, up_d, grads);
  net_.backward(tp, up_p, grads);

  // Gradient penalty at dataset samples: w_gp * mean ||dD/dx||^2. The
  // first-order input gradient doubles as the tangent of the
  // double-backward pass.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(1);
  for (Eigen::Index i = 0; i < xd.rows(); ++i) {
    const Eigen::VectorXd g = net_.input_gradient(xd.row(i).transpose(), ones);
    report.penalty_term += cfg_.w_gp * g.squaredNorm() / nd;
    if (cfg_.w_gp != 0.0)
      net_.directional_param_gradient(xd.row(i).transpose(), 2.0 * g, ones,
                                      cfg_.w_gp / nd, grads);
  }

  if (grad_out) *grad_out = approx::Mlp::grads_flat(grads);
  return report;
}

Discriminator::LossReport Discriminator::update(
    std::span<const priors::TransitionPair> dataset_batch,
    std::span<const priors::TransitionPair> policy_batch) {
  Eigen::VectorXd grad;
  const LossReport report = objective(dataset_batch, policy_batch, &grad);
  Eigen::VectorXd params = net_.params_flat();
  opt_.apply(params, grad);
  net_.set_params_flat(params);
  return report;
}

void Discriminator::save(serial::Writer& w) const {
  w.u32(static_cast<uint32_t>(cfg_.feature_dim));
  w.f64(cfg_.w_gp);
  w.f64(cfg_.lr);
  net_.save(w);
  norm_.save(w);
  opt_.save(w);
}

Discriminator Discriminator::load(serial::Reader& r) {
  Discriminator d;
  d.cfg_.feature_dim = static_cast<int>(r.u32());
  d.cfg_.w_gp = r.f64();
  d.cfg_.lr = r.f64();
  d.net_ = approx::Mlp::load(r);
  d.norm_ = approx::RunningNormalizer::load(r);
  d.opt_ = approx::AdamState::load(r);
  return d;
}

void TransitionBuffer::push(const priors::TransitionPair& pair) {
  buffer_.push_back(pair);
  if (buffer_.size() > capacity_) buffer_.pop_front();
}

void TransitionBuffer::push(std::span<const priors::TransitionPair> pairs) {
  for (const auto& p : pairs) push(p);
}

std::vector<priors::TransitionPair> TransitionBuffer::sample(
    int n, std::mt19937_64& rng) const {
  if (n < 0 || static_cast<size_t>(n) > buffer_.size())
    throw InsufficientSamples("transition buffer holds fewer samples than requested");
  // partial Fisher-Yates over an index vector
  std::vector<size_t> idx(buffer_.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<priors::TransitionPair> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(buffer_[idx[i]]);
  }
  return out;
}

}  // namespace jetleg::amp
