#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "headwayrl/env.hpp"
#include "headwayrl/mlp.hpp"
#include "headwayrl/rng.hpp"
#include "headwayrl/simulator.hpp"

namespace headwayrl {

struct AgentConfig {
    double learning_rate = 0.01;
    double gamma = 0.4;
    int batch_size = 32;
    int buffer_capacity = 3000;
    int hidden_layers = 10;
    int hidden_units = 300;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_decay_fraction = 0.6; // fraction of total steps spent decaying
    int target_sync_period = 500;    // steps between target-network syncs
    int episodes = 300;
    std::uint64_t seed = 0;
    bool store_forced = false; // keep forced endpoint actions in the replay buffer
    bool early_stop = true;

    void validate() const;
    static AgentConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

/// Ring buffer of transitions; oldest evicted first, sampling uniform with
/// replacement over whatever is stored.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return store_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return store_[i]; }

    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> store_;
};

/// Interval-rule-constrained epsilon-greedy. The elapsed interval t_ml
/// overrides the policy outside the [T_min, T_max) band: at or beyond
/// T_max a departure is forced (so no emitted gap can exceed T_max), and
/// below T_min departures are blocked. Inside the band: epsilon-random,
/// otherwise argmax with ties broken toward holding.
int select_action(const Mlp& q, const std::vector<double>& state, int t_ml, int t_min,
                  int t_max, double epsilon, Rng& rng);

/// r for terminal transitions, else r + gamma * max_a q_target(s', a).
double td_target(double r, const std::vector<double>& s_next, bool done, const Mlp& q_target,
                 double gamma);

/// One SGD step on a uniformly sampled batch; targets come from the frozen
/// target network. Returns the pre-step loss.
double train_step(Mlp& q, const Mlp& q_target, const ReplayBuffer& buffer,
                  const AgentConfig& cfg, Rng& rng);

struct EpisodeStats {
    int episode = 0;
    double mean_reward = 0.0;
    Metrics metrics;
};

struct TrainResult {
    Mlp network;
    std::vector<EpisodeStats> curve;
    Timetable timetable; // greedy rollout after training
    EvalResult final_eval;
    std::vector<TraceRecord> final_trace;
    int episodes_run = 0;
};

/// Full training run: per episode, roll the env with rule-constrained
/// epsilon-greedy actions, store transitions, take one gradient step per
/// minute once the buffer holds a batch, and sync the target network on a
/// fixed step period. Deterministic for a fixed (config, demand) pair.
TrainResult train(const LineConfig& line, const TravelTimeTable& tt, const DemandSet& demand,
                  const AgentConfig& cfg, const RewardParams& reward,
                  const StateRewardScheme* scheme = nullptr);

struct RolloutResult {
    Timetable timetable;
    double mean_reward = 0.0;
    std::vector<TraceRecord> trace;
    Metrics metrics;
};

/// One episode under a fixed policy. net == nullptr plays the
/// rule-constrained uniform-random policy (epsilon is then irrelevant).
RolloutResult rollout_policy(Env& env, const Mlp* net, double epsilon, std::uint64_t seed,
                             const TravelTimeTable& tt, const DemandSet& demand);

/// n policy episodes with per-episode derived seeds (post-convergence
/// statistics for the parameter and feature analyses).
std::vector<RolloutResult> run_policy_episodes(const LineConfig& line,
                                               const TravelTimeTable& tt,
                                               const DemandSet& demand, const Mlp* net,
                                               const RewardParams& reward,
                                               const StateRewardScheme* scheme, double epsilon,
                                               int count, std::uint64_t seed);

std::string reward_curve_csv(const std::vector<EpisodeStats>& curve);

/// Checkpoint: magic line, JSON header (layer sizes, activation tag,
/// parameter count, seed, config echo, reward params, scheme tag), then
/// the raw little-endian 64-bit-float parameter array.
std::string checkpoint_to_string(const Mlp& net, const AgentConfig& cfg,
                                 const RewardParams& reward, const std::string& scheme);
void save_checkpoint(const Mlp& net, const AgentConfig& cfg, const RewardParams& reward,
                     const std::string& scheme, const std::filesystem::path& path);

struct Checkpoint {
    Mlp network;
    AgentConfig config;
    RewardParams reward;
    std::string scheme;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace headwayrl
