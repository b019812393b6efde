#include "headwayrl/agent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <json.hpp>

#include "headwayrl/util.hpp"

namespace headwayrl {

void AgentConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (buffer_capacity < batch_size)
        throw std::invalid_argument("buffer_capacity must hold at least one batch");
    if (hidden_layers < 1 || hidden_units < 1)
        throw std::invalid_argument("network needs at least one hidden layer and unit");
    if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0))
        throw std::invalid_argument("epsilon bounds must be probabilities");
    if (!(eps_decay_fraction >= 0.0 && eps_decay_fraction <= 1.0))
        throw std::invalid_argument("eps_decay_fraction must be in [0, 1]");
    if (target_sync_period < 1) throw std::invalid_argument("target_sync_period must be >= 1");
    if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
}

AgentConfig AgentConfig::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    AgentConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.gamma = j.value("gamma", c.gamma);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.hidden_units = j.value("hidden_units", c.hidden_units);
    c.eps_start = j.value("eps_start", c.eps_start);
    c.eps_end = j.value("eps_end", c.eps_end);
    c.eps_decay_fraction = j.value("eps_decay_fraction", c.eps_decay_fraction);
    c.target_sync_period = j.value("target_sync_period", c.target_sync_period);
    c.episodes = j.value("episodes", c.episodes);
    c.seed = j.value("seed", c.seed);
    c.store_forced = j.value("store_forced", c.store_forced);
    c.early_stop = j.value("early_stop", c.early_stop);
    c.validate();
    return c;
}

std::string AgentConfig::to_json_text() const {
    nlohmann::json j;
    j["learning_rate"] = learning_rate;
    j["gamma"] = gamma;
    j["batch_size"] = batch_size;
    j["buffer_capacity"] = buffer_capacity;
    j["hidden_layers"] = hidden_layers;
    j["hidden_units"] = hidden_units;
    j["eps_start"] = eps_start;
    j["eps_end"] = eps_end;
    j["eps_decay_fraction"] = eps_decay_fraction;
    j["target_sync_period"] = target_sync_period;
    j["episodes"] = episodes;
    j["seed"] = seed;
    j["store_forced"] = store_forced;
    j["early_stop"] = early_stop;
    return j.dump(2) + "\n";
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("buffer capacity must be positive");
    store_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
    if (store_.size() < capacity_) {
        store_.push_back(std::move(t));
    } else {
        store_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (store_.empty()) throw std::logic_error("sampling from an empty buffer");
    std::vector<const Transition*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(&store_[rng.below(store_.size())]);
    return out;
}

int select_action(const Mlp& q, const std::vector<double>& state, int t_ml, int t_min,
                  int t_max, double epsilon, Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon must be in [0, 1]");
    const double u = rng.uniform(); // explore draw happens first, as in the policy's pseudocode
    if (t_ml >= t_max) return 1;    // firing at the band edge keeps every emitted gap <= T_max
    if (t_ml < t_min) return 0;
    if (u < epsilon) return static_cast<int>(rng.below(2));
    const auto qv = q.forward(state);
    return qv[1] > qv[0] ? 1 : 0; // ties hold the bus
}

double td_target(double r, const std::vector<double>& s_next, bool done, const Mlp& q_target,
                 double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
    if (done) return r;
    const auto qv = q_target.forward(s_next);
    return r + gamma * *std::max_element(qv.begin(), qv.end());
}

double train_step(Mlp& q, const Mlp& q_target, const ReplayBuffer& buffer,
                  const AgentConfig& cfg, Rng& rng) {
    // sampling is with replacement, so any non-empty buffer can fill a batch
    if (buffer.size() == 0) throw std::logic_error("replay buffer is empty");
    const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), rng);

    std::vector<std::vector<double>> states;
    std::vector<int> actions;
    std::vector<double> targets;
    states.reserve(batch.size());
    actions.reserve(batch.size());
    targets.reserve(batch.size());
    for (const Transition* t : batch) {
        states.push_back(t->s);
        actions.push_back(t->a);
        targets.push_back(td_target(t->r, t->s_next, t->done, q_target, cfg.gamma));
    }

    std::vector<double> grad;
    const double loss = q.td_loss_grad(states, actions, targets, grad);
    q.sgd_step(grad, cfg.learning_rate);
    return loss;
}

namespace {

double stddev(const std::vector<int>& xs) {
    if (xs.empty()) return 0.0;
    double mean = 0.0;
    for (int x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (int x : xs) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(xs.size()));
}

} // namespace

TrainResult train(const LineConfig& line, const TravelTimeTable& tt, const DemandSet& demand,
                  const AgentConfig& cfg, const RewardParams& reward,
                  const StateRewardScheme* scheme) {
    cfg.validate();
    if (demand.records.empty()) throw std::invalid_argument("training needs demand");

    Env env(line, tt, demand, reward, scheme);

    std::vector<int> sizes;
    sizes.push_back(static_cast<int>(env.state_dim()));
    for (int i = 0; i < cfg.hidden_layers; ++i) sizes.push_back(cfg.hidden_units);
    sizes.push_back(2);

    Mlp q(sizes, Rng::derive(cfg.seed, 1));
    Mlp q_target = q;
    Rng action_rng(Rng::derive(cfg.seed, 2));
    Rng sample_rng(Rng::derive(cfg.seed, 3));
    ReplayBuffer buffer(static_cast<std::size_t>(cfg.buffer_capacity));

    const long total_steps =
        static_cast<long>(cfg.episodes) * static_cast<long>(env.steps_per_episode());
    const double decay_steps =
        std::max(1.0, cfg.eps_decay_fraction * static_cast<double>(total_steps));

    TrainResult result;
    long global_step = 0;
    std::vector<int> nd_history;
    int plateau_hits = 0;
    double prev_block_std = -1.0;

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        env.reset();
        double reward_sum = 0.0;
        long steps = 0;
        while (!env.done()) {
            const double eps =
                cfg.eps_start + (cfg.eps_end - cfg.eps_start) *
                                    std::min(1.0, static_cast<double>(global_step) / decay_steps);
            const auto& s = env.observe();
            const int a = select_action(q, s, env.minutes_since_departure(), line.min_interval,
                                        line.max_interval, eps, action_rng);
            StepResult out = env.step(a);
            reward_sum += out.transition.r;
            ++steps;
            if (!out.forced || cfg.store_forced) buffer.push(std::move(out.transition));
            if (buffer.size() >= static_cast<std::size_t>(cfg.batch_size))
                train_step(q, q_target, buffer, cfg, sample_rng);
            ++global_step;
            if (global_step % cfg.target_sync_period == 0) q_target = q;
        }

        EpisodeStats stats;
        stats.episode = ep;
        stats.mean_reward = steps > 0 ? reward_sum / static_cast<double>(steps) : 0.0;
        Timetable ep_tt = env.episode_to_timetable();
        stats.metrics = evaluate_timetable(demand, line, tt, ep_tt).metrics;
        nd_history.push_back(stats.metrics.nd);
        result.curve.push_back(stats);
        result.episodes_run = ep + 1;

        // plateau detection on the departure-count spread of trailing blocks
        if (cfg.early_stop && nd_history.size() >= 50 && nd_history.size() % 25 == 0) {
            std::vector<int> block(nd_history.end() - 25, nd_history.end());
            const double cur = stddev(block);
            if (prev_block_std >= 0.0) {
                const double denom = std::max(prev_block_std, 1e-9);
                if (std::abs(cur - prev_block_std) / denom < 0.05) {
                    if (++plateau_hits >= 2) {
                        log::info("early stop after " + fmt_int(ep + 1) + " episodes");
                        break;
                    }
                } else {
                    plateau_hits = 0;
                }
            }
            prev_block_std = cur;
        }
    }

    env.reset();
    RolloutResult greedy = rollout_policy(env, &q, 0.0, Rng::derive(cfg.seed, 4), tt, demand);
    result.network = std::move(q);
    result.timetable = greedy.timetable;
    result.final_trace = std::move(greedy.trace);
    result.final_eval = evaluate_timetable(demand, line, tt, result.timetable);
    return result;
}

RolloutResult rollout_policy(Env& env, const Mlp* net, double epsilon, std::uint64_t seed,
                             const TravelTimeTable& tt, const DemandSet& demand) {
    env.reset();
    Rng rng(seed);
    const LineConfig& line = env.line();
    double reward_sum = 0.0;
    long steps = 0;
    while (!env.done()) {
        int a;
        const int t_ml = env.minutes_since_departure();
        if (net) {
            a = select_action(*net, env.observe(), t_ml, line.min_interval, line.max_interval,
                              epsilon, rng);
        } else {
            // rule-constrained uniform-random policy
            if (t_ml >= line.max_interval) a = 1;
            else if (t_ml < line.min_interval) a = 0;
            else a = static_cast<int>(rng.below(2));
        }
        reward_sum += env.step(a).transition.r;
        ++steps;
    }
    RolloutResult out;
    out.timetable = env.episode_to_timetable();
    out.mean_reward = steps > 0 ? reward_sum / static_cast<double>(steps) : 0.0;
    out.trace = env.trace();
    out.metrics = evaluate_timetable(demand, env.line(), tt, out.timetable).metrics;
    return out;
}

std::vector<RolloutResult> run_policy_episodes(const LineConfig& line,
                                               const TravelTimeTable& tt,
                                               const DemandSet& demand, const Mlp* net,
                                               const RewardParams& reward,
                                               const StateRewardScheme* scheme, double epsilon,
                                               int count, std::uint64_t seed) {
    Env env(line, tt, demand, reward, scheme);
    std::vector<RolloutResult> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        out.push_back(rollout_policy(env, net, epsilon,
                                     Rng::derive(seed, 100 + static_cast<std::uint64_t>(i)), tt,
                                     demand));
    return out;
}

std::string reward_curve_csv(const std::vector<EpisodeStats>& curve) {
    std::string out = "episode,mean_reward,nd,awt,nsp\n";
    for (const auto& e : curve) {
        out += fmt_int(e.episode);
        out += ',';
        out += fmt_double(e.mean_reward);
        out += ',';
        out += fmt_int(e.metrics.nd);
        out += ',';
        out += fmt_double(e.metrics.awt);
        out += ',';
        out += fmt_int(e.metrics.nsp);
        out += '\n';
    }
    return out;
}

namespace {
constexpr const char* kCheckpointMagic = "HEADWAYRL-QNET-1";
}

std::string checkpoint_to_string(const Mlp& net, const AgentConfig& cfg,
                                 const RewardParams& reward, const std::string& scheme) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint writer assumes a little-endian host");
    nlohmann::json header;
    header["layer_sizes"] = net.sizes();
    header["activation"] = "relu";
    header["param_count"] = net.param_count();
    header["seed"] = cfg.seed;
    header["config"] = nlohmann::json::parse(cfg.to_json_text());
    header["reward"] = nlohmann::json::parse(reward_params_to_json_text(reward));
    header["scheme"] = scheme;

    std::string blob = std::string(kCheckpointMagic) + "\n" + header.dump() + "\n";
    const auto& p = net.params();
    blob.append(reinterpret_cast<const char*>(p.data()), p.size() * sizeof(double));
    return blob;
}

void save_checkpoint(const Mlp& net, const AgentConfig& cfg, const RewardParams& reward,
                     const std::string& scheme, const std::filesystem::path& path) {
    atomic_write(path, checkpoint_to_string(net, cfg, reward, scheme));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::string blob = read_file(path);
    auto l1 = blob.find('\n');
    if (l1 == std::string::npos || blob.substr(0, l1) != kCheckpointMagic)
        throw std::invalid_argument(path.string() + ": not a checkpoint file");
    auto l2 = blob.find('\n', l1 + 1);
    if (l2 == std::string::npos)
        throw std::invalid_argument(path.string() + ": truncated checkpoint header");
    nlohmann::json header = nlohmann::json::parse(blob.substr(l1 + 1, l2 - l1 - 1));
    if (header.at("activation").get<std::string>() != "relu")
        throw std::invalid_argument("unsupported activation tag");
    auto sizes = header.at("layer_sizes").get<std::vector<int>>();
    auto count = header.at("param_count").get<std::size_t>();
    const std::size_t need = count * sizeof(double);
    if (blob.size() - (l2 + 1) != need)
        throw std::invalid_argument(path.string() + ": parameter blob size mismatch");
    std::vector<double> params(count);
    std::memcpy(params.data(), blob.data() + l2 + 1, need);

    Checkpoint cp{Mlp(std::move(sizes), std::move(params)),
                  AgentConfig::from_json_text(header.at("config").dump()),
                  reward_params_from_json_text(header.value("reward", nlohmann::json::object()).dump()),
                  header.value("scheme", "default")};
    return cp;
}

} // namespace headwayrl
