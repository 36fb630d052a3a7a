#include "shotrl/rl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace shotrl {

namespace {

double clamp(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, v));
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double ols_slope(std::span<const double> y) {
  const int n = static_cast<int>(y.size());
  const double xbar = (n - 1) / 2.0;
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += (i - xbar) * (y[i] - ybar);
    den += (i - xbar) * (i - xbar);
  }
  return num / den;
}

RLState compute_state(std::span<const double> window, double tracked_min) {
  if (window.size() < 2) {
    throw std::invalid_argument("compute_state: window too short");
  }
  const double slope = ols_slope(window);
  RLState s;
  if (std::abs(slope) < 1e-10) {
    s.x1 = 10.0;
  } else {
    s.x1 = clamp(-std::log10(std::abs(slope)), -10.0, 10.0);
  }
  const double wmin = *std::min_element(window.begin(), window.end());
  s.x2 = (wmin <= tracked_min) ? 1.0 : 0.0;
  return s;
}

RLState ConvergenceTracker::observe_window(std::span<const double> window) {
  if (static_cast<int>(window.size()) != p_) {
    throw std::invalid_argument("observe_window: expected window of length " +
                                std::to_string(p_));
  }
  const RLState s = compute_state(window, tracked_min_);
  const double wmin = *std::min_element(window.begin(), window.end());
  tracked_min_ = std::min(tracked_min_, wmin);
  return s;
}

// ----------------------------------------------------------------- actor

Actor::Actor(int hidden, double a_min, Rng& rng)
    : net_({2, hidden, hidden, 1}, rng), a_min_(a_min) {}

Eigen::Vector2d Actor::features(const RLState& x) {
  // x1 spans [-10, 10]; scale into [-1, 1] for the tanh stack
  return {x.x1 / 10.0, x.x2};
}

double Actor::act(const RLState& x) const {
  const double z = net_.forward(features(x))(0);
  return a_min_ + (1.0 - a_min_) * sigmoid(z);
}

Eigen::RowVectorXd Actor::act_batch(const Eigen::MatrixXd& X,
                                    DenseNet::Cache* cache,
                                    Eigen::RowVectorXd* sig_out) const {
  const Eigen::MatrixXd z = net_.forward_batch(X, cache);
  Eigen::RowVectorXd sig = z.row(0).unaryExpr([](double v) { return sigmoid(v); });
  if (sig_out) *sig_out = sig;
  return (a_min_ + (1.0 - a_min_) * sig.array()).matrix();
}

// ----------------------------------------------------------------- replay

void ReplayBuffer::push(const Transition& t) {
  data_.push_back(t);
  if (static_cast<int>(data_.size()) > capacity_) data_.pop_front();
}

std::vector<Transition> ReplayBuffer::sample(int batch, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(batch);
  for (int i = 0; i < batch; ++i) {
    out.push_back(data_[rng.below(data_.size())]);
  }
  return out;
}

// ----------------------------------------------------------------- bundle

PolicyBundle::PolicyBundle(const Td3Hyper& hp, Rng& rng)
    : hp_(hp),
      actor_(hp.hidden, hp.a_min, rng),
      q1_({3, hp.hidden, hp.hidden, 1}, rng),
      q2_({3, hp.hidden, hp.hidden, 1}, rng),
      buffer_(hp.capacity) {
  actor_t_ = actor_;
  q1t_ = q1_;
  q2t_ = q2_;
  opt_actor_.lr = hp.actor_lr;
  opt_q1_.lr = hp.critic_lr;
  opt_q2_.lr = hp.critic_lr;
}

double PolicyBundle::select_action(const RLState& x, bool explore,
                                   Rng& rng) const {
  double a = actor_.act(x);
  if (explore) a += hp_.explore_noise * rng.normal();
  return clamp(a, hp_.a_min, 1.0);
}

namespace {

Eigen::MatrixXd state_features(std::span<const Transition> batch, bool next) {
  Eigen::MatrixXd X(2, batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    X.col(i) = Actor::features(next ? batch[i].x_next : batch[i].x);
  }
  return X;
}

Eigen::MatrixXd critic_input(const Eigen::MatrixXd& X,
                             const Eigen::RowVectorXd& a) {
  Eigen::MatrixXd in(3, X.cols());
  in.topRows(2) = X;
  in.row(2) = a;
  return in;
}

}  // namespace

Eigen::VectorXd PolicyBundle::critic_targets(
    std::span<const Transition> batch,
    std::span<const double> target_noise) const {
  const Eigen::MatrixXd Xn = state_features(batch, true);
  Eigen::RowVectorXd an = actor_t_.act_batch(Xn, nullptr, nullptr);
  for (Eigen::Index i = 0; i < an.size(); ++i) {
    an(i) = clamp(an(i) + target_noise[i], hp_.a_min, 1.0);
  }
  const Eigen::MatrixXd in = critic_input(Xn, an);
  const Eigen::RowVectorXd y1 = q1t_.forward_batch(in).row(0);
  const Eigen::RowVectorXd y2 = q2t_.forward_batch(in).row(0);
  Eigen::VectorXd y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double boot = std::min(y1(i), y2(i));
    y(i) = batch[i].r + (batch[i].done ? 0.0 : hp_.discount * boot);
  }
  return y;
}

double PolicyBundle::critic_loss(int which, std::span<const Transition> batch,
                                 const Eigen::VectorXd& targets) const {
  const DenseNet& q = which == 1 ? q1_ : q2_;
  const Eigen::MatrixXd X = state_features(batch, false);
  Eigen::RowVectorXd a(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) a(i) = batch[i].a;
  const Eigen::RowVectorXd pred = q.forward_batch(critic_input(X, a)).row(0);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double d = pred(i) - targets(i);
    loss += d * d;
  }
  return loss / static_cast<double>(batch.size());
}

Eigen::VectorXd PolicyBundle::critic_loss_grad(
    int which, std::span<const Transition> batch,
    const Eigen::VectorXd& targets) const {
  const DenseNet& q = which == 1 ? q1_ : q2_;
  const Eigen::MatrixXd X = state_features(batch, false);
  Eigen::RowVectorXd a(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) a(i) = batch[i].a;
  DenseNet::Cache cache;
  const Eigen::RowVectorXd pred =
      q.forward_batch(critic_input(X, a), &cache).row(0);
  Eigen::MatrixXd dY(1, batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    dY(0, i) = 2.0 * (pred(i) - targets(i)) / static_cast<double>(batch.size());
  }
  Eigen::VectorXd grad;
  q.backward(cache, dY, grad);
  return grad;
}

double PolicyBundle::actor_objective(std::span<const Transition> batch) const {
  const Eigen::MatrixXd X = state_features(batch, false);
  const Eigen::RowVectorXd a = actor_.act_batch(X, nullptr, nullptr);
  const Eigen::RowVectorXd qv = q1_.forward_batch(critic_input(X, a)).row(0);
  return qv.mean();
}

Eigen::VectorXd PolicyBundle::actor_objective_grad(
    std::span<const Transition> batch) const {
  const Eigen::MatrixXd X = state_features(batch, false);
  DenseNet::Cache actor_cache;
  Eigen::RowVectorXd sig;
  const Eigen::RowVectorXd a = actor_.act_batch(X, &actor_cache, &sig);
  DenseNet::Cache critic_cache;
  q1_.forward_batch(critic_input(X, a), &critic_cache);

  const double bn = static_cast<double>(batch.size());
  Eigen::MatrixXd dY = Eigen::MatrixXd::Constant(1, batch.size(), 1.0 / bn);
  Eigen::VectorXd critic_grad_unused;
  const Eigen::MatrixXd din =
      q1_.backward(critic_cache, dY, critic_grad_unused);
  // chain dJ/da through the scaled sigmoid head
  Eigen::MatrixXd dz(1, batch.size());
  for (Eigen::Index i = 0; i < dz.cols(); ++i) {
    dz(0, i) = din(2, i) * (1.0 - actor_.a_min()) * sig(i) * (1.0 - sig(i));
  }
  Eigen::VectorXd grad;
  actor_.net().backward(actor_cache, dz, grad);
  return grad;
}

Td3Diagnostics PolicyBundle::td3_update(std::span<const Transition> batch,
                                        std::span<const double> target_noise) {
  if (batch.empty()) throw std::invalid_argument("td3_update: empty batch");
  if (target_noise.size() != batch.size()) {
    throw std::invalid_argument("td3_update: noise size mismatch");
  }
  Td3Diagnostics diag;
  const Eigen::VectorXd y = critic_targets(batch, target_noise);
  diag.mean_target = y.mean();
  diag.critic1_loss = critic_loss(1, batch, y);
  diag.critic2_loss = critic_loss(2, batch, y);
  const Eigen::VectorXd g1 = critic_loss_grad(1, batch, y);
  const Eigen::VectorXd g2 = critic_loss_grad(2, batch, y);
  opt_q1_.step(q1_.parameters(), g1);
  opt_q2_.step(q2_.parameters(), g2);

  ++update_calls_;
  if (update_calls_ % hp_.policy_delay == 0) {
    diag.actor_updated = true;
    diag.actor_objective = actor_objective(batch);
    const Eigen::VectorXd ga = actor_objective_grad(batch);
    const Eigen::VectorXd loss_grad = -ga;  // ascend the objective
    opt_actor_.step(actor_.net().parameters(), loss_grad);
    polyak_update(q1t_, q1_, hp_.polyak);
    polyak_update(q2t_, q2_, hp_.polyak);
    polyak_update(actor_t_.net(), actor_.net(), hp_.polyak);
  }
  return diag;
}

std::optional<Td3Diagnostics> PolicyBundle::train_step(Rng& rng) {
  if (buffer_.size() == 0) {
    std::cerr << "td3: replay buffer empty, skipping update\n";
    return std::nullopt;
  }
  const int batch_size = std::min(hp_.batch_size, buffer_.size());
  const std::vector<Transition> batch = buffer_.sample(batch_size, rng);
  std::vector<double> noise(batch.size());
  for (auto& n : noise) {
    n = clamp(hp_.target_noise * rng.normal(), -hp_.target_noise_clip,
              hp_.target_noise_clip);
  }
  return td3_update(batch, noise);
}

void PolicyBundle::save_checkpoint(
    const std::string& path,
    const std::map<std::string, std::string>& metadata) const {
  nlohmann::json doc;
  doc["format_version"] = 1;
  nlohmann::json hp;
  hp["discount"] = hp_.discount;
  hp["polyak"] = hp_.polyak;
  hp["batch_size"] = hp_.batch_size;
  hp["capacity"] = hp_.capacity;
  hp["actor_lr"] = hp_.actor_lr;
  hp["critic_lr"] = hp_.critic_lr;
  hp["explore_noise"] = hp_.explore_noise;
  hp["target_noise"] = hp_.target_noise;
  hp["target_noise_clip"] = hp_.target_noise_clip;
  hp["policy_delay"] = hp_.policy_delay;
  hp["warmup_steps"] = hp_.warmup_steps;
  hp["a_min"] = hp_.a_min;
  hp["hidden"] = hp_.hidden;
  hp["window_p"] = hp_.window_p;
  hp["convergence_threshold"] = hp_.convergence_threshold;
  hp["terminal_bonus"] = hp_.terminal_bonus;
  doc["hyperparameters"] = hp;
  doc["metadata"] = metadata;
  doc["actor"] = nlohmann::json::parse(actor_.net().to_json());
  doc["actor_target"] = nlohmann::json::parse(actor_t_.net().to_json());
  doc["critic1"] = nlohmann::json::parse(q1_.to_json());
  doc["critic2"] = nlohmann::json::parse(q2_.to_json());
  doc["critic1_target"] = nlohmann::json::parse(q1t_.to_json());
  doc["critic2_target"] = nlohmann::json::parse(q2t_.to_json());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << doc.dump(2) << "\n";
}

PolicyBundle PolicyBundle::load_checkpoint(
    const std::string& path, std::map<std::string, std::string>* metadata) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (doc.value("format_version", 0) != 1) {
    throw std::runtime_error(path + ": unsupported checkpoint version");
  }
  PolicyBundle b;
  const auto& hp = doc.at("hyperparameters");
  b.hp_.discount = hp.at("discount").get<double>();
  b.hp_.polyak = hp.at("polyak").get<double>();
  b.hp_.batch_size = hp.at("batch_size").get<int>();
  b.hp_.capacity = hp.at("capacity").get<int>();
  b.hp_.actor_lr = hp.at("actor_lr").get<double>();
  b.hp_.critic_lr = hp.at("critic_lr").get<double>();
  b.hp_.explore_noise = hp.at("explore_noise").get<double>();
  b.hp_.target_noise = hp.at("target_noise").get<double>();
  b.hp_.target_noise_clip = hp.at("target_noise_clip").get<double>();
  b.hp_.policy_delay = hp.at("policy_delay").get<int>();
  b.hp_.warmup_steps = hp.at("warmup_steps").get<int>();
  b.hp_.a_min = hp.at("a_min").get<double>();
  b.hp_.hidden = hp.at("hidden").get<int>();
  b.hp_.window_p = hp.at("window_p").get<int>();
  b.hp_.convergence_threshold = hp.at("convergence_threshold").get<double>();
  b.hp_.terminal_bonus = hp.at("terminal_bonus").get<double>();
  b.buffer_ = ReplayBuffer(b.hp_.capacity);
  Rng scratch(0);
  b.actor_ = Actor(b.hp_.hidden, b.hp_.a_min, scratch);
  b.actor_t_ = b.actor_;
  b.actor_.net() = DenseNet::from_json(doc.at("actor").dump());
  b.actor_t_.net() = DenseNet::from_json(doc.at("actor_target").dump());
  b.q1_ = DenseNet::from_json(doc.at("critic1").dump());
  b.q2_ = DenseNet::from_json(doc.at("critic2").dump());
  b.q1t_ = DenseNet::from_json(doc.at("critic1_target").dump());
  b.q2t_ = DenseNet::from_json(doc.at("critic2_target").dump());
  b.opt_actor_.lr = b.hp_.actor_lr;
  b.opt_q1_.lr = b.hp_.critic_lr;
  b.opt_q2_.lr = b.hp_.critic_lr;
  if (metadata) {
    *metadata = doc.value("metadata", std::map<std::string, std::string>{});
  }
  return b;
}

// ---------------------------------------------------------------- env

ShotBudgetEnv::ShotBudgetEnv(const AnsatzCircuit& circuit,
                             const HamiltonianSpec& spec,
                             const CliquePartition& partition,
                             const OptimizerConfig& optimizer,
                             AllocationMethod method, long long budget,
                             const Td3Hyper& hp)
    : circuit_(circuit),
      spec_(spec),
      partition_(partition),
      optimizer_(optimizer),
      method_(method),
      budget_(budget),
      hp_(hp),
      tracker_(hp.window_p, hp.convergence_threshold) {
  const long long floor_shots = std::llround(budget * hp.a_min);
  if (floor_shots < partition.n_cliques()) {
    throw std::invalid_argument(
        "env: budget * a_min smaller than the clique count");
  }
}

RLState ShotBudgetEnv::reset(Rng& rng) {
  run_ = std::make_unique<VqeRun>(circuit_, spec_, partition_, optimizer_,
                                  method_, rng, false);
  tracker_.reset();
  last_state_ = initial_state();
  return last_state_;
}

ShotBudgetEnv::StepResult ShotBudgetEnv::step(double a) {
  if (!run_ || run_->finished()) {
    throw std::logic_error("env: step() on a finished run");
  }
  a = std::min(1.0, std::max(hp_.a_min, a));
  const long long n_t = std::llround(static_cast<double>(budget_) * a);
  std::vector<double> window;
  for (int i = 0; i < hp_.window_p && !run_->finished(); ++i) {
    run_->step(n_t);
    window.push_back(run_->trace().rows.back().estimated_energy);
  }
  StepResult out;
  if (static_cast<int>(window.size()) == hp_.window_p) {
    out.next = tracker_.observe_window(window);
    out.converged = tracker_.converged(out.next);
  } else {
    out.next = last_state_;  // truncated final window, no state update
    out.converged = false;
  }
  out.done = out.converged || run_->finished();
  out.reward = -a + (out.converged ? hp_.terminal_bonus : 0.0);
  last_state_ = out.next;
  return out;
}

std::string episode_log_to_csv(const std::vector<EpisodeLog>& log) {
  std::ostringstream out;
  out << "episode,total_reward,iterations,steps,mean_action,mode_action,"
         "converged,action_histogram\n";
  out.precision(10);
  for (const auto& e : log) {
    out << e.episode << ',' << e.total_reward << ',' << e.iterations << ','
        << e.steps << ',' << e.mean_action << ',' << e.mode_action << ','
        << (e.converged ? 1 : 0) << ',';
    for (std::size_t b = 0; b < e.action_bins.size(); ++b) {
      out << (b ? ":" : "") << e.action_bins[b];
    }
    out << '\n';
  }
  return out.str();
}

std::vector<EpisodeLog> train_policy(ShotBudgetEnv& env, int episodes,
                                     PolicyBundle& bundle, Rng& rng) {
  if (episodes < 1) throw std::invalid_argument("train_policy: episodes < 1");
  const Td3Hyper& hp = bundle.hyper();
  std::vector<EpisodeLog> log;
  long total_steps = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    RLState x = env.reset(rng);
    EpisodeLog entry;
    entry.episode = ep;
    std::vector<int> bins(20, 0);
    double action_sum = 0.0;
    bool done = false;
    while (!done) {
      double a;
      if (total_steps < hp.warmup_steps) {
        a = rng.uniform(hp.a_min, 1.0);
      } else {
        a = bundle.select_action(x, true, rng);
      }
      const auto res = env.step(a);
      bundle.buffer().push({x, a, res.reward, res.next, res.done});
      ++total_steps;
      ++entry.steps;
      entry.total_reward += res.reward;
      action_sum += a;
      bins[std::min<int>(19, static_cast<int>(a / 0.05))] += 1;
      if (total_steps > hp.warmup_steps) bundle.train_step(rng);
      x = res.next;
      done = res.done;
      entry.converged = res.converged;
    }
    entry.iterations = env.iterations_used();
    entry.mean_action = action_sum / entry.steps;
    const int mode_bin =
        std::max_element(bins.begin(), bins.end()) - bins.begin();
    entry.mode_action = (mode_bin + 0.5) * 0.05;
    entry.action_bins = bins;
    log.push_back(entry);
  }
  return log;
}

// ------------------------------------------------------- eval controller

PolicyShotController::PolicyShotController(Actor actor, long long budget,
                                           int window_p, double threshold)
    : actor_(std::move(actor)),
      budget_(budget),
      p_(window_p),
      tracker_(window_p, threshold),
      state_(ShotBudgetEnv::initial_state()) {}

long long PolicyShotController::shots_for_iteration(int iteration,
                                                    const VqeTrace&) {
  if (iteration % p_ == 0) {
    const double a = actor_.act(state_);
    current_shots_ = std::llround(static_cast<double>(budget_) * a);
  }
  return current_shots_;
}

bool PolicyShotController::should_stop(int iteration, const VqeTrace& trace) {
  if ((iteration + 1) % p_ == 0) {
    std::vector<double> window;
    const auto& rows = trace.rows;
    for (std::size_t i = rows.size() - p_; i < rows.size(); ++i) {
      window.push_back(rows[i].estimated_energy);
    }
    state_ = tracker_.observe_window(window);
    converged_ = tracker_.converged(state_);
  }
  return converged_;
}

}  // namespace shotrl
