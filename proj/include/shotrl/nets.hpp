#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "shotrl/rng.hpp"

namespace shotrl {

/// Adam over a flat Eigen parameter vector (canonical constants, fixed lr).
struct AdamOpt {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Eigen::VectorXd m, v;
  long step_count = 0;

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
};

/// Fully connected network with tanh hidden activations and a linear output,
/// parameters stored flat (per layer: column-major W, then b) so optimizers,
/// polyak averaging and finite-difference checks address one vector.
class DenseNet {
 public:
  DenseNet() = default;
  /// Xavier-uniform init drawn from rng.
  DenseNet(std::vector<int> layer_sizes, Rng& rng);

  struct Cache {
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = input batch
  };

  /// Columns of X are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X,
                                Cache* cache = nullptr) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  /// Backpropagates dL/dY; accumulates dL/dparams into grad (resized and
  /// zeroed) and returns dL/dX.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& dY,
                           Eigen::VectorXd& grad) const;

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  int n_layers() const { return static_cast<int>(sizes_.size()) - 1; }

  std::string to_json() const;
  static DenseNet from_json(const std::string& text);

 private:
  friend class NetViews;
  std::vector<int> sizes_;
  std::vector<int> w_offsets_, b_offsets_;
  Eigen::VectorXd params_;

  void build_offsets();
};

/// Polyak blend: target <- rho * target + (1 - rho) * live.
void polyak_update(DenseNet& target, const DenseNet& live, double rho);

}  // namespace shotrl
