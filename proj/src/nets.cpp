#include "shotrl/nets.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace shotrl {

void AdamOpt::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
    step_count = 0;
  }
  ++step_count;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  params -= lr * (m / c1).cwiseQuotient(((v / c2).cwiseSqrt().array() + epsilon).matrix());
}

void DenseNet::build_offsets() {
  w_offsets_.clear();
  b_offsets_.clear();
  int off = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    w_offsets_.push_back(off);
    off += sizes_[l] * sizes_[l + 1];
    b_offsets_.push_back(off);
    off += sizes_[l + 1];
  }
  if (params_.size() != off) params_ = Eigen::VectorXd::Zero(off);
}

DenseNet::DenseNet(std::vector<int> layer_sizes, Rng& rng)
    : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("net: need >= 2 layers");
  build_offsets();
  for (int l = 0; l < n_layers(); ++l) {
    const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    double* w = params_.data() + w_offsets_[l];
    for (int i = 0; i < fan_in * fan_out; ++i) w[i] = rng.uniform(-limit, limit);
    // biases start at zero
  }
}

Eigen::MatrixXd DenseNet::forward_batch(const Eigen::MatrixXd& X,
                                        Cache* cache) const {
  if (X.rows() != sizes_.front()) {
    throw std::invalid_argument("net: input dimension mismatch");
  }
  Eigen::MatrixXd a = X;
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(a);
  }
  for (int l = 0; l < n_layers(); ++l) {
    Eigen::Map<const Eigen::MatrixXd> W(params_.data() + w_offsets_[l],
                                        sizes_[l + 1], sizes_[l]);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + b_offsets_[l],
                                        sizes_[l + 1]);
    Eigen::MatrixXd z = (W * a).colwise() + b;
    a = (l + 1 < n_layers()) ? z.array().tanh().matrix() : z;
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& x) const {
  return forward_batch(x);
}

Eigen::MatrixXd DenseNet::backward(const Cache& cache, const Eigen::MatrixXd& dY,
                                   Eigen::VectorXd& grad) const {
  grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd dz = dY;
  for (int l = n_layers() - 1; l >= 0; --l) {
    if (l != n_layers() - 1) {
      // undo tanh: act = cache.acts[l + 1]
      dz = dz.cwiseProduct(
          (1.0 - cache.acts[l + 1].array().square()).matrix());
    }
    Eigen::Map<Eigen::MatrixXd> dW(grad.data() + w_offsets_[l], sizes_[l + 1],
                                   sizes_[l]);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + b_offsets_[l], sizes_[l + 1]);
    dW = dz * cache.acts[l].transpose();
    db = dz.rowwise().sum();
    Eigen::Map<const Eigen::MatrixXd> W(params_.data() + w_offsets_[l],
                                        sizes_[l + 1], sizes_[l]);
    dz = (W.transpose() * dz).eval();
  }
  return dz;
}

std::string DenseNet::to_json() const {
  nlohmann::json doc;
  doc["layer_sizes"] = sizes_;
  doc["params"] = std::vector<double>(params_.data(),
                                      params_.data() + params_.size());
  return doc.dump();
}

DenseNet DenseNet::from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  DenseNet net;
  net.sizes_ = doc.at("layer_sizes").get<std::vector<int>>();
  net.build_offsets();
  const auto vals = doc.at("params").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(vals.size()) != net.params_.size()) {
    throw std::invalid_argument("net: parameter count mismatch in checkpoint");
  }
  for (std::size_t i = 0; i < vals.size(); ++i) net.params_[i] = vals[i];
  return net;
}

void polyak_update(DenseNet& target, const DenseNet& live, double rho) {
  target.parameters() =
      rho * target.parameters() + (1.0 - rho) * live.parameters();
}

}  // namespace shotrl
