#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "jetleg/approx.hpp"
#include "jetleg/priors.hpp"

namespace jetleg::amp {

/// log(1 + e^x) without overflow for large |x|.
double softplus(double x);
double sigmoid(double x);

struct DiscriminatorConfig {
  std::vector<int> hidden{128, 128};
  double w_gp = 10.0;
  double lr = 1e-4;
  int feature_dim = priors::kFeatureDim;
};

/// GAN-style discriminator over consecutive feature pairs. Inputs are the
/// two frames normalized by a shared (frozen) feature normalizer and
/// concatenated.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& cfg, uint64_t seed);

  /// Locks the feature normalizer to the dataset statistics so agent and
  /// dataset samples are scaled identically.
  void freeze_normalizer(const priors::MotionDataset& dataset);

  double logit(const priors::FeatureFrame& a, const priors::FeatureFrame& b) const;
  double style_reward(const priors::FeatureFrame& a,
                      const priors::FeatureFrame& b) const;

  struct LossReport {
    double dataset_term = 0.0;  // -E_D[log sigma(D)]
    double policy_term = 0.0;   // -E_pi[log(1 - sigma(D))]
    double penalty_term = 0.0;  // w_gp * E_D[ ||dD/dinput||^2 ]
    double total() const { return dataset_term + policy_term + penalty_term; }
  };

  /// One optimizer step on the three-term objective; returns the term
  /// values evaluated before the step.
  LossReport update(std::span<const priors::TransitionPair> dataset_batch,
                    std::span<const priors::TransitionPair> policy_batch);

  /// Objective value and parameter gradient without stepping (testing).
  LossReport objective(std::span<const priors::TransitionPair> dataset_batch,
                       std::span<const priors::TransitionPair> policy_batch,
                       Eigen::VectorXd* grad_out) const;

  const approx::Mlp& net() const { return net_; }
  approx::Mlp& net() { return net_; }
  const approx::RunningNormalizer& normalizer() const { return norm_; }
  approx::RunningNormalizer& normalizer() { return norm_; }
  double w_gp() const { return cfg_.w_gp; }
  int feature_dim() const { return cfg_.feature_dim; }

  void save(serial::Writer& w) const;
  static Discriminator load(serial::Reader& r);

 private:
  Eigen::VectorXd normalized_input(const priors::FeatureFrame& a,
                                   const priors::FeatureFrame& b) const;

  DiscriminatorConfig cfg_;
  approx::Mlp net_;
  approx::RunningNormalizer norm_;
  approx::AdamState opt_;
};

/// FIFO ring of policy-produced transitions feeding discriminator updates.
class TransitionBuffer {
 public:
  explicit TransitionBuffer(size_t capacity) : capacity_(capacity) {}

  void push(const priors::TransitionPair& pair);
  void push(std::span<const priors::TransitionPair> pairs);
  size_t size() const { return buffer_.size(); }
  size_t capacity() const { return capacity_; }

  /// Uniform without replacement within one call. Throws
  /// InsufficientSamples when n exceeds the current size.
  std::vector<priors::TransitionPair> sample(int n, std::mt19937_64& rng) const;

 private:
  size_t capacity_;
  std::deque<priors::TransitionPair> buffer_;
};

}  // namespace jetleg::amp
