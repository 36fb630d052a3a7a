#pragma once

#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shotrl/nets.hpp"
#include "shotrl/rng.hpp"
#include "shotrl/vqe.hpp"

namespace shotrl {

/// Optimization-progress state: x1 = -log10(|OLS slope|) of the last p
/// estimated energies (clamped to [-10, 10], slope magnitudes below 1e-10 map
/// to 10), x2 = 1 when the window minimum is at or below the tracked minimum.
struct RLState {
  double x1 = 0.0;
  double x2 = 0.0;
};

RLState compute_state(std::span<const double> window, double tracked_min);

/// Ordinary least-squares slope of y against indices 0..n-1.
double ols_slope(std::span<const double> y);

struct Transition {
  RLState x;
  double a = 0.0;
  double r = 0.0;
  RLState x_next;
  bool done = false;
};

/// Window bookkeeping shared by training and frozen-policy evaluation: feeds
/// p-iteration windows of estimated energies, yields states, and applies the
/// convergence rule x1 > threshold && x2 == 1.
class ConvergenceTracker {
 public:
  ConvergenceTracker(int window_p, double threshold)
      : p_(window_p), threshold_(threshold) {}

  RLState observe_window(std::span<const double> window);
  bool converged(const RLState& s) const {
    return s.x1 > threshold_ && s.x2 == 1.0;
  }
  void reset() { tracked_min_ = std::numeric_limits<double>::infinity(); }
  int window_p() const { return p_; }
  double tracked_min() const { return tracked_min_; }

 private:
  int p_;
  double threshold_;
  double tracked_min_ = std::numeric_limits<double>::infinity();
};

/// Deterministic policy head: 2 -> hidden -> hidden -> 1 with tanh hiddens
/// and a sigmoid output scaled onto [a_min, 1].
class Actor {
 public:
  Actor() = default;
  Actor(int hidden, double a_min, Rng& rng);

  double act(const RLState& x) const;
  /// Batch act with cached forward pass for backprop; rows of X are (x1, x2)
  /// features, output row vector of actions.
  Eigen::RowVectorXd act_batch(const Eigen::MatrixXd& X, DenseNet::Cache* cache,
                               Eigen::RowVectorXd* sig_out) const;

  DenseNet& net() { return net_; }
  const DenseNet& net() const { return net_; }
  double a_min() const { return a_min_; }

  static Eigen::Vector2d features(const RLState& x);

 private:
  DenseNet net_;
  double a_min_ = 0.05;
};

struct Td3Hyper {
  double discount = 0.99;
  double polyak = 0.995;
  int batch_size = 64;
  int capacity = 50000;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double explore_noise = 0.1;
  double target_noise = 0.2;
  double target_noise_clip = 0.5;
  int policy_delay = 2;
  int warmup_steps = 200;
  double a_min = 0.05;
  int hidden = 64;
  int window_p = 10;
  double convergence_threshold = 3.5;
  double terminal_bonus = 20.0;
};

/// Fixed-capacity FIFO transition store with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity) : capacity_(capacity) {}

  void push(const Transition& t);
  int size() const { return static_cast<int>(data_.size()); }
  const Transition& at(int i) const { return data_[i]; }
  std::vector<Transition> sample(int batch, Rng& rng) const;

 private:
  int capacity_;
  std::deque<Transition> data_;
};

struct Td3Diagnostics {
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double mean_target = 0.0;
  bool actor_updated = false;
  double actor_objective = 0.0;  // only meaningful when actor_updated
};

/// Actor, twin critics, their target copies, per-network Adam state and the
/// replay buffer.
class PolicyBundle {
 public:
  PolicyBundle(const Td3Hyper& hp, Rng& rng);

  double select_action(const RLState& x, bool explore, Rng& rng) const;

  /// One TD3 update on an explicit batch with pre-drawn (already clipped)
  /// target-smoothing noise, one entry per transition.
  Td3Diagnostics td3_update(std::span<const Transition> batch,
                            std::span<const double> target_noise);
  /// Samples a batch from the replay buffer and updates. No-op with a warning
  /// to stderr when the buffer is empty.
  std::optional<Td3Diagnostics> train_step(Rng& rng);

  // pure loss/objective/gradient routes, shared by the update path and the
  // finite-difference tests
  Eigen::VectorXd critic_targets(std::span<const Transition> batch,
                                 std::span<const double> target_noise) const;
  double critic_loss(int which, std::span<const Transition> batch,
                     const Eigen::VectorXd& targets) const;
  Eigen::VectorXd critic_loss_grad(int which, std::span<const Transition> batch,
                                   const Eigen::VectorXd& targets) const;
  double actor_objective(std::span<const Transition> batch) const;
  Eigen::VectorXd actor_objective_grad(std::span<const Transition> batch) const;

  Actor& actor() { return actor_; }
  const Actor& actor() const { return actor_; }
  DenseNet& critic(int which) { return which == 1 ? q1_ : q2_; }
  DenseNet& critic_target(int which) { return which == 1 ? q1t_ : q2t_; }
  const Actor& actor_target() const { return actor_t_; }
  Actor& actor_target_mutable() { return actor_t_; }
  ReplayBuffer& buffer() { return buffer_; }
  const Td3Hyper& hyper() const { return hp_; }
  long update_calls() const { return update_calls_; }

  void save_checkpoint(const std::string& path,
                       const std::map<std::string, std::string>& metadata) const;
  static PolicyBundle load_checkpoint(const std::string& path,
                                      std::map<std::string, std::string>* metadata = nullptr);

 private:
  PolicyBundle() : buffer_(0) {}

  Td3Hyper hp_;
  Actor actor_, actor_t_;
  DenseNet q1_, q2_, q1t_, q2t_;
  AdamOpt opt_actor_, opt_q1_, opt_q2_;
  ReplayBuffer buffer_;
  long update_calls_ = 0;
};

/// The shot-allocation MDP around one VQE run: an action a in [a_min, 1]
/// fixes N_t = round(N * a) for the next p iterations; reward is -a with a
/// bonus of +20 when the convergence rule ends the episode.
class ShotBudgetEnv {
 public:
  ShotBudgetEnv(const AnsatzCircuit& circuit, const HamiltonianSpec& spec,
                const CliquePartition& partition,
                const OptimizerConfig& optimizer, AllocationMethod method,
                long long budget, const Td3Hyper& hp);

  RLState reset(Rng& rng);

  struct StepResult {
    double reward = 0.0;
    RLState next;
    bool done = false;
    bool converged = false;
  };
  StepResult step(double a);

  bool active() const { return run_ != nullptr && !run_->finished(); }
  int iterations_used() const { return run_ ? run_->iteration() : 0; }
  long long shots_used() const { return run_ ? run_->trace().total_shots() : 0; }
  long long budget() const { return budget_; }
  const VqeTrace* trace() const { return run_ ? &run_->trace() : nullptr; }

  static constexpr RLState initial_state() { return {0.0, 1.0}; }

 private:
  const AnsatzCircuit& circuit_;
  const HamiltonianSpec& spec_;
  const CliquePartition& partition_;
  OptimizerConfig optimizer_;
  AllocationMethod method_;
  long long budget_;
  Td3Hyper hp_;
  ConvergenceTracker tracker_;
  std::unique_ptr<VqeRun> run_;
  RLState last_state_;
};

struct EpisodeLog {
  int episode = 0;
  double total_reward = 0.0;
  int iterations = 0;
  int steps = 0;
  double mean_action = 0.0;
  double mode_action = 0.0;  // center of the most used 0.05-wide action bin
  std::vector<int> action_bins;  // 20 bins over [0, 1]
  bool converged = false;
};

std::string episode_log_to_csv(const std::vector<EpisodeLog>& log);

/// Runs E episodes on the environment, storing every transition and doing one
/// td3 update per environment step once warmup_steps random-action steps have
/// been taken.
std::vector<EpisodeLog> train_policy(ShotBudgetEnv& env, int episodes,
                                     PolicyBundle& bundle, Rng& rng);

/// Frozen-policy shot controller for evaluation campaigns: reproduces the
/// training-time window logic (deterministic actions, convergence stop).
class PolicyShotController final : public ShotController {
 public:
  PolicyShotController(Actor actor, long long budget, int window_p,
                       double threshold);

  long long shots_for_iteration(int iteration, const VqeTrace& trace) override;
  bool should_stop(int iteration, const VqeTrace& trace) override;

 private:
  Actor actor_;
  long long budget_;
  int p_;
  ConvergenceTracker tracker_;
  RLState state_;
  bool converged_ = false;
  long long current_shots_ = 0;
};

}  // namespace shotrl
