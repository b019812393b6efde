#include "headwayrl/commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "headwayrl/agent.hpp"
#include "headwayrl/baselines.hpp"
#include "headwayrl/env.hpp"
#include "headwayrl/line_model.hpp"
#include "headwayrl/od_data.hpp"
#include "headwayrl/simulator.hpp"
#include "headwayrl/util.hpp"

namespace headwayrl::cli {

namespace {

using nlohmann::json;

/// Collects outputs for one run, digesting as it writes; on failure every
/// partial output is removed again.
class OutSink {
public:
    explicit OutSink(const std::filesystem::path& dir) : dir_(dir) {
        std::filesystem::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& content) {
        atomic_write(dir_ / name, content);
        written_.emplace_back(name, fnv1a_hex(content));
    }

    void discard_all() {
        for (const auto& [name, digest] : written_) {
            std::error_code ec;
            std::filesystem::remove(dir_ / name, ec);
        }
        written_.clear();
    }

    const std::vector<std::pair<std::string, std::string>>& written() const { return written_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::string>> written_;
};

void write_manifest(OutSink& sink, const std::string& command, const json& args,
                    std::uint64_t seed, const std::map<std::string, std::string>& inputs) {
    json m;
    m["command"] = command;
    m["args"] = args;
    m["seed"] = seed;
    m["input_digests"] = inputs;
    m["artifact_version"] = kArtifactVersion;
    auto& outs = m["outputs"] = json::array();
    for (const auto& [name, digest] : sink.written())
        outs.push_back({{"name", name}, {"digest", digest}});
    sink.write("manifest.json", m.dump(2) + "\n");
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    return json::parse(read_file(path));
}

json section(const json& config, const std::string& name) {
    return config.contains(name) ? config.at(name) : json::object();
}

/// defaults <- --config section <- dedicated file
json merged_section(const json& config, const std::string& name, const std::string& file) {
    json j = section(config, name);
    if (!file.empty()) j.update(json::parse(read_file(file)));
    return j;
}

struct Shared {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    int jobs = 1;
};

std::uint64_t resolve_seed(const Shared& shared, const json& agent_json) {
    if (shared.seed_given) return shared.seed;
    if (agent_json.contains("seed")) return agent_json.at("seed").get<std::uint64_t>();
    return shared.seed;
}

struct LoadedLine {
    LineConfig line;
    TravelTimeTable tt;
};

LoadedLine load_line(const std::string& path) {
    auto [line, tt] = load_line_file(path);
    tt.validate_no_overtake();
    return LoadedLine{line, std::move(tt)};
}

// ---------------------------------------------------------------- gen-data

int cmd_gen_data(const Shared& shared, const std::string& spec_path) {
    OutSink sink(shared.out);
    try {
        auto spec = SyntheticDemandSpec::from_file(spec_path);
        DemandSet demand = generate_synthetic(spec, shared.seed);
        sink.write("demand.csv", demand_to_csv(demand));
        json args;
        args["spec"] = spec_path;
        write_manifest(sink, "gen-data", args, shared.seed, {{spec_path, file_digest(spec_path)}});
        return 0;
    } catch (const std::exception& e) {
        sink.discard_all();
        log::error(std::string("gen-data failed: ") + e.what());
        return 1;
    }
}

// ------------------------------------------------------------------- train

int cmd_train(const Shared& shared, const std::string& line_path,
              const std::string& demand_path, const std::string& agent_path,
              const std::string& variant) {
    OutSink sink(shared.out);
    try {
        json config = load_config_file(shared.config_path);
        LoadedLine ll = load_line(line_path);
        DemandSet demand = load_demand(demand_path, kDemandCsvSchema, ll.line.stations);

        json agent_json = merged_section(config, "agent", agent_path);
        AgentConfig cfg = AgentConfig::from_json_text(agent_json.dump());
        cfg.seed = resolve_seed(shared, agent_json);
        json reward_json = section(config, "reward");
        reward_json.update(agent_json); // omega/beta/mu may ride in the agent file
        RewardParams reward = reward_params_from_json_text(reward_json.dump());

        auto scheme = make_scheme(variant);
        TrainResult result = train(ll.line, ll.tt, demand, cfg, reward, scheme.get());

        sink.write("checkpoint.bin", checkpoint_to_string(result.network, cfg, reward, variant));
        sink.write("reward_curve.csv", reward_curve_csv(result.curve));
        sink.write("timetable.csv", timetable_to_csv(result.timetable));
        sink.write("metrics.json", metrics_report_json(result.final_eval));
        sink.write("episode_trace.jsonl", trace_to_jsonl(result.final_trace));

        json args;
        args["line"] = line_path;
        args["demand"] = demand_path;
        if (!agent_path.empty()) args["agent"] = agent_path;
        if (!shared.config_path.empty()) args["config"] = shared.config_path;
        args["variant"] = variant;
        std::map<std::string, std::string> inputs{{line_path, file_digest(line_path)},
                                                  {demand_path, file_digest(demand_path)}};
        if (!agent_path.empty()) inputs[agent_path] = file_digest(agent_path);
        if (!shared.config_path.empty())
            inputs[shared.config_path] = file_digest(shared.config_path);
        write_manifest(sink, "train", args, cfg.seed, inputs);
        return 0;
    } catch (const std::exception& e) {
        sink.discard_all();
        log::error(std::string("train failed: ") + e.what());
        return 1;
    }
}

// -------------------------------------------------------------------- eval

int cmd_eval(const Shared& shared, const std::string& line_path,
             const std::string& demand_path, const std::string& timetable_path) {
    OutSink sink(shared.out);
    try {
        LoadedLine ll = load_line(line_path);
        DemandSet demand = load_demand(demand_path, kDemandCsvSchema, ll.line.stations);
        Timetable tt = load_timetable_csv(timetable_path);
        EvalResult result = evaluate_timetable(demand, ll.line, ll.tt, tt);
        sink.write("metrics.json", metrics_report_json(result));
        sink.write("capacity_series.csv", capacity_series_csv(result));
        json args;
        args["line"] = line_path;
        args["demand"] = demand_path;
        args["timetable"] = timetable_path;
        write_manifest(sink, "eval", args, shared.seed,
                       {{line_path, file_digest(line_path)},
                        {demand_path, file_digest(demand_path)},
                        {timetable_path, file_digest(timetable_path)}});
        return 0;
    } catch (const std::exception& e) {
        sink.discard_all();
        log::error(std::string("eval failed: ") + e.what());
        return 1;
    }
}

// ---------------------------------------------------------------- scenario

struct ScenarioCell {
    std::string method;
    std::string setting;
    Metrics metrics;
};

std::string scenario_csv(const std::vector<ScenarioCell>& cells) {
    std::string out = "method,setting,nd,awt,nsp\n";
    for (const auto& c : cells) {
        out += c.method;
        out += ',';
        out += c.setting;
        out += ',';
        out += fmt_int(c.metrics.nd);
        out += ',';
        out += fmt_double(c.metrics.awt);
        out += ',';
        out += fmt_int(c.metrics.nsp);
        out += '\n';
    }
    return out;
}

int cmd_scenario(const Shared& shared, const std::string& line_path,
                 const std::string& demand_path, const std::string& transform,
                 double window_start, double window_end, const std::vector<int>& shifts,
                 const std::vector<double>& rates, const std::string& dqn_path,
                 std::string ga_path, std::string memetic_path,
                 const std::string& manual_path, bool optimize_ga, bool optimize_memetic,
                 const std::string& ga_params_path, const std::string& weights_path) {
    OutSink sink(shared.out);
    try {
        json config = load_config_file(shared.config_path);
        LoadedLine ll = load_line(line_path);
        DemandSet base = load_demand(demand_path, kDemandCsvSchema, ll.line.stations);

        // frozen search baselines may be optimized here on the base demand
        if ((optimize_ga && !ga_path.empty()) || (optimize_memetic && !memetic_path.empty()))
            throw std::invalid_argument("give either a frozen timetable or --optimize-*, not both");
        if (optimize_ga || optimize_memetic) {
            GaParams gp = GaParams::from_json_text(
                merged_section(config, "ga", ga_params_path).dump());
            gp.seed = Rng::derive(shared.seed, 42);
            FitnessWeights weights = FitnessWeights::from_json_text(
                merged_section(config, "weights", weights_path).dump());
            if (optimize_ga) {
                SearchResult r = ga_optimize(base, ll.line, ll.tt, gp, weights);
                sink.write("ga_timetable.csv", timetable_to_csv(r.best));
                ga_path = (sink.dir() / "ga_timetable.csv").string();
            }
            if (optimize_memetic) {
                SearchResult r = memetic_optimize(base, ll.line, ll.tt, gp, weights);
                sink.write("memetic_timetable.csv", timetable_to_csv(r.best));
                memetic_path = (sink.dir() / "memetic_timetable.csv").string();
            }
        }

        struct Setting {
            std::string label;
            DemandSet demand;
        };
        std::vector<Setting> settings;
        if (transform == "shift") {
            if (shifts.empty()) throw std::invalid_argument("shift transform needs --shifts");
            for (int s : shifts)
                settings.push_back(
                    {"shift:" + fmt_int(s), shift_peak(base, window_start, window_end, s)});
        } else if (transform == "sample") {
            if (rates.empty()) throw std::invalid_argument("sample transform needs --rates");
            for (std::size_t i = 0; i < rates.size(); ++i)
                settings.push_back({"rate:" + fmt_double(rates[i]),
                                    resample(base, rates[i], Rng::derive(shared.seed, i))});
        } else {
            throw std::invalid_argument("transform must be shift or sample");
        }

        struct Method {
            std::string name;
            std::string path;
        };
        std::vector<Method> fixed;
        if (!ga_path.empty()) fixed.push_back({"ga", ga_path});
        if (!memetic_path.empty()) fixed.push_back({"memetic", memetic_path});
        if (!manual_path.empty()) fixed.push_back({"manual", manual_path});
        if (dqn_path.empty() && fixed.empty())
            throw std::invalid_argument("scenario needs at least one method");

        std::vector<std::function<ScenarioCell()>> tasks;

        if (!dqn_path.empty()) {
            auto cp = std::make_shared<Checkpoint>(load_checkpoint(dqn_path));
            auto scheme = std::shared_ptr<StateRewardScheme>(make_scheme(cp->scheme));
            for (std::size_t i = 0; i < settings.size(); ++i) {
                const Setting* st = &settings[i];
                std::uint64_t rseed = Rng::derive(shared.seed, 1000 + i);
                tasks.push_back([st, cp, scheme, &ll, rseed]() {
                    Env env(ll.line, ll.tt, st->demand, cp->reward, scheme.get());
                    RolloutResult r =
                        rollout_policy(env, &cp->network, 0.0, rseed, ll.tt, st->demand);
                    return ScenarioCell{"dqn", st->label, r.metrics};
                });
            }
        }
        for (const auto& method : fixed) {
            Timetable fixed_tt = load_timetable_csv(method.path);
            for (const auto& st : settings) {
                const Setting* stp = &st;
                std::string name = method.name;
                auto tt_copy = std::make_shared<Timetable>(fixed_tt);
                tasks.push_back([stp, name, tt_copy, &ll]() {
                    EvalResult r = evaluate_timetable(stp->demand, ll.line, ll.tt, *tt_copy);
                    return ScenarioCell{name, stp->label, r.metrics};
                });
            }
        }

        std::vector<ScenarioCell> cells(tasks.size());
        if (shared.jobs > 1) {
            std::vector<std::future<ScenarioCell>> futures;
            futures.reserve(tasks.size());
            for (auto& t : tasks) futures.push_back(std::async(std::launch::async, t));
            for (std::size_t i = 0; i < futures.size(); ++i) cells[i] = futures[i].get();
        } else {
            for (std::size_t i = 0; i < tasks.size(); ++i) cells[i] = tasks[i]();
        }

        sink.write("comparison.csv", scenario_csv(cells));

        json args;
        args["line"] = line_path;
        args["demand"] = demand_path;
        args["transform"] = transform;
        if (transform == "shift") {
            args["window-start"] = window_start;
            args["window-end"] = window_end;
            args["shifts"] = shifts;
        } else {
            args["rates"] = rates;
        }
        std::map<std::string, std::string> inputs{{line_path, file_digest(line_path)},
                                                  {demand_path, file_digest(demand_path)}};
        if (!dqn_path.empty()) {
            args["dqn"] = dqn_path;
            inputs[dqn_path] = file_digest(dqn_path);
        }
        for (const auto& m : fixed) {
            if ((m.name == "ga" && optimize_ga) || (m.name == "memetic" && optimize_memetic))
                continue; // regenerated on re-run, not an input
            args[m.name] = m.path;
            inputs[m.path] = file_digest(m.path);
        }
        if (optimize_ga) args["optimize-ga"] = true;
        if (optimize_memetic) args["optimize-memetic"] = true;
        if (!ga_params_path.empty()) {
            args["ga-params"] = ga_params_path;
            inputs[ga_params_path] = file_digest(ga_params_path);
        }
        if (!weights_path.empty()) {
            args["weights"] = weights_path;
            inputs[weights_path] = file_digest(weights_path);
        }
        if (!shared.config_path.empty()) {
            args["config"] = shared.config_path;
            inputs[shared.config_path] = file_digest(shared.config_path);
        }
        write_manifest(sink, "scenario", args, shared.seed, inputs);
        return 0;
    } catch (const std::exception& e) {
        sink.discard_all();
        log::error(std::string("scenario failed: ") + e.what());
        return 1;
    }
}

// ------------------------------------------------------------------- sweep

int cmd_sweep(const Shared& shared, const std::string& param,
              const std::vector<double>& values, int repeats, const std::string& line_path,
              const std::string& demand_path, const std::string& agent_path) {
    OutSink sink(shared.out);
    try {
        if (values.empty()) throw std::invalid_argument("sweep needs --values");
        if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
        json config = load_config_file(shared.config_path);
        LoadedLine ll = load_line(line_path);
        DemandSet demand = load_demand(demand_path, kDemandCsvSchema, ll.line.stations);
        json agent_json = merged_section(config, "agent", agent_path);
        AgentConfig base_cfg = AgentConfig::from_json_text(agent_json.dump());
        std::uint64_t seed = resolve_seed(shared, agent_json);
        json reward_json = section(config, "reward");
        reward_json.update(agent_json);
        RewardParams base_reward = reward_params_from_json_text(reward_json.dump());

        std::string csv;
        if (param == "omega") {
            struct Cell {
                int nd;
                double awt;
            };
            std::vector<std::vector<Cell>> grid(values.size());
            auto run_one = [&](std::size_t vi, int rep) {
                AgentConfig cfg = base_cfg;
                cfg.seed = Rng::derive(seed, vi * 1000 + static_cast<std::size_t>(rep));
                RewardParams rw = base_reward;
                rw.omega = values[vi];
                TrainResult t = train(ll.line, ll.tt, demand, cfg, rw, nullptr);
                return Cell{t.final_eval.metrics.nd, t.final_eval.metrics.awt};
            };

            std::vector<std::pair<std::size_t, int>> cells;
            for (std::size_t vi = 0; vi < values.size(); ++vi)
                for (int rep = 0; rep < repeats; ++rep) cells.emplace_back(vi, rep);

            std::vector<Cell> results(cells.size());
            if (shared.jobs > 1) {
                std::vector<std::future<Cell>> futures;
                for (auto [vi, rep] : cells)
                    futures.push_back(std::async(std::launch::async, run_one, vi, rep));
                for (std::size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
            } else {
                for (std::size_t i = 0; i < cells.size(); ++i)
                    results[i] = run_one(cells[i].first, cells[i].second);
            }
            for (std::size_t i = 0; i < cells.size(); ++i)
                grid[cells[i].first].push_back(results[i]);

            csv = "omega,nd_max,nd_min,nd_mode,awt_max,awt_min,awt_avg\n";
            for (std::size_t vi = 0; vi < values.size(); ++vi) {
                const auto& col = grid[vi];
                int nd_max = col[0].nd, nd_min = col[0].nd;
                double awt_max = col[0].awt, awt_min = col[0].awt, awt_sum = 0.0;
                std::map<int, int> mode_count;
                for (const auto& c : col) {
                    nd_max = std::max(nd_max, c.nd);
                    nd_min = std::min(nd_min, c.nd);
                    awt_max = std::max(awt_max, c.awt);
                    awt_min = std::min(awt_min, c.awt);
                    awt_sum += c.awt;
                    mode_count[c.nd] += 1;
                }
                int mode = col[0].nd, best = 0;
                for (const auto& [nd, count] : mode_count)
                    if (count > best) {
                        best = count;
                        mode = nd;
                    }
                csv += fmt_double(values[vi]) + "," + fmt_int(nd_max) + "," + fmt_int(nd_min) +
                       "," + fmt_int(mode) + "," + fmt_double(awt_max) + "," +
                       fmt_double(awt_min) + "," +
                       fmt_double(awt_sum / static_cast<double>(col.size())) + "\n";
            }
        } else if (param == "gamma") {
            csv = "gamma,nd_std\n";
            auto run_one = [&](std::size_t vi) {
                AgentConfig cfg = base_cfg;
                cfg.gamma = values[vi];
                cfg.seed = Rng::derive(seed, 7000 + vi);
                TrainResult t = train(ll.line, ll.tt, demand, cfg, base_reward, nullptr);
                auto eps = run_policy_episodes(ll.line, ll.tt, demand, &t.network, base_reward,
                                               nullptr, cfg.eps_end, 25,
                                               Rng::derive(seed, 8000 + vi));
                double mean = 0.0;
                for (const auto& e : eps) mean += e.metrics.nd;
                mean /= static_cast<double>(eps.size());
                double var = 0.0;
                for (const auto& e : eps)
                    var += (e.metrics.nd - mean) * (e.metrics.nd - mean);
                return std::sqrt(var / static_cast<double>(eps.size()));
            };
            std::vector<double> stds(values.size());
            if (shared.jobs > 1) {
                std::vector<std::future<double>> futures;
                for (std::size_t vi = 0; vi < values.size(); ++vi)
                    futures.push_back(std::async(std::launch::async, run_one, vi));
                for (std::size_t vi = 0; vi < values.size(); ++vi) stds[vi] = futures[vi].get();
            } else {
                for (std::size_t vi = 0; vi < values.size(); ++vi) stds[vi] = run_one(vi);
            }
            for (std::size_t vi = 0; vi < values.size(); ++vi)
                csv += fmt_double(values[vi]) + "," + fmt_double(stds[vi]) + "\n";
        } else {
            throw std::invalid_argument("param must be omega or gamma");
        }

        sink.write("sweep.csv", csv);
        json args;
        args["param"] = param;
        args["values"] = values;
        args["repeats"] = repeats;
        args["line"] = line_path;
        args["demand"] = demand_path;
        if (!agent_path.empty()) args["agent"] = agent_path;
        if (!shared.config_path.empty()) args["config"] = shared.config_path;
        std::map<std::string, std::string> inputs{{line_path, file_digest(line_path)},
                                                  {demand_path, file_digest(demand_path)}};
        if (!agent_path.empty()) inputs[agent_path] = file_digest(agent_path);
        if (!shared.config_path.empty())
            inputs[shared.config_path] = file_digest(shared.config_path);
        write_manifest(sink, "sweep", args, seed, inputs);
        return 0;
    } catch (const std::exception& e) {
        sink.discard_all();
        log::error(std::string("sweep failed: ") + e.what());
        return 1;
    }
}

// ------------------------------------------------------------------ ablate

int cmd_ablate(const Shared& shared, const std::string& variant, const std::string& line_path,
               const std::string& demand_path, const std::string& agent_path) {
    OutSink sink(shared.out);
    try {
        json config = load_config_file(shared.config_path);
        LoadedLine ll = load_line(line_path);
        DemandSet demand = load_demand(demand_path, kDemandCsvSchema, ll.line.stations);
        json agent_json = merged_section(config, "agent", agent_path);
        AgentConfig cfg = AgentConfig::from_json_text(agent_json.dump());
        cfg.seed = resolve_seed(shared, agent_json);
        json reward_json = section(config, "reward");
        reward_json.update(agent_json);
        RewardParams reward = reward_params_from_json_text(reward_json.dump());

        auto scheme = make_scheme(variant);
        TrainResult result = train(ll.line, ll.tt, demand, cfg, reward, scheme.get());

        auto episodes = run_policy_episodes(ll.line, ll.tt, demand, &result.network, reward,
                                            scheme.get(), cfg.eps_end, 20,
                                            Rng::derive(cfg.seed, 9000));
        VariantStats stats = variant_statistics(variant, episodes);

        sink.write("reward_curve.csv", reward_curve_csv(result.curve));
        sink.write("variant_stats.csv", variant_stats_csv({stats}));
        sink.write("checkpoint.bin", checkpoint_to_string(result.network, cfg, reward, variant));

        json args;
        args["variant"] = variant;
        args["line"] = line_path;
        args["demand"] = demand_path;
        if (!agent_path.empty()) args["agent"] = agent_path;
        if (!shared.config_path.empty()) args["config"] = shared.config_path;
        std::map<std::string, std::string> inputs{{line_path, file_digest(line_path)},
                                                  {demand_path, file_digest(demand_path)}};
        if (!agent_path.empty()) inputs[agent_path] = file_digest(agent_path);
        if (!shared.config_path.empty())
            inputs[shared.config_path] = file_digest(shared.config_path);
        write_manifest(sink, "ablate", args, cfg.seed, inputs);
        return 0;
    } catch (const std::exception& e) {
        sink.discard_all();
        log::error(std::string("ablate failed: ") + e.what());
        return 1;
    }
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& tok : split(s, ','))
        if (!trim(tok).empty()) out.push_back(std::stoi(trim(tok)));
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split(s, ','))
        if (!trim(tok).empty()) out.push_back(std::stod(trim(tok)));
    return out;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"bus-line simulation and timetable learning toolkit"};
    app.require_subcommand(1);
    app.fallthrough(true);

    Shared shared;
    app.add_option("--config", shared.config_path, "JSON config with agent/reward/ga/weights sections");
    auto* seed_opt = app.add_option("--seed", shared.seed, "master seed");
    app.add_option("--out", shared.out, "output directory")->required();
    app.add_option("--jobs", shared.jobs, "parallel jobs for sweep/scenario cells");

    std::string spec_path, line_path, demand_path, agent_path, timetable_path;
    std::string variant = "default";
    std::string transform, dqn_path, ga_path, memetic_path, manual_path, param;
    std::string shifts_str, rates_str, values_str, ga_params_path, weights_path;
    double window_start = 0.0, window_end = 0.0;
    int repeats = 1;
    bool optimize_ga = false, optimize_memetic = false;

    auto* gen = app.add_subcommand("gen-data", "generate synthetic demand");
    gen->add_option("--spec", spec_path, "synthetic demand spec (JSON)")->required();

    auto* tr = app.add_subcommand("train", "train the departure controller");
    tr->add_option("--line", line_path, "line config file")->required();
    tr->add_option("--demand", demand_path, "demand CSV")->required();
    tr->add_option("--agent", agent_path, "agent config (JSON)");
    tr->add_option("--variant", variant, "state/reward variant");

    auto* ev = app.add_subcommand("eval", "evaluate a timetable");
    ev->add_option("--line", line_path, "line config file")->required();
    ev->add_option("--demand", demand_path, "demand CSV")->required();
    ev->add_option("--timetable", timetable_path, "timetable CSV")->required();

    auto* sc = app.add_subcommand("scenario", "compare methods under demand transforms");
    sc->add_option("--line", line_path, "line config file")->required();
    sc->add_option("--demand", demand_path, "base demand CSV")->required();
    sc->add_option("--transform", transform, "shift | sample")->required();
    sc->add_option("--window-start", window_start, "shift window start minute");
    sc->add_option("--window-end", window_end, "shift window end minute");
    sc->add_option("--shifts", shifts_str, "comma list of signed shift minutes");
    sc->add_option("--rates", rates_str, "comma list of sampling rates");
    sc->add_option("--dqn", dqn_path, "trained checkpoint");
    sc->add_option("--ga", ga_path, "frozen GA timetable CSV");
    sc->add_option("--memetic", memetic_path, "frozen memetic timetable CSV");
    sc->add_option("--manual", manual_path, "manual timetable CSV");
    sc->add_flag("--optimize-ga", optimize_ga, "run GA on the base demand and freeze it");
    sc->add_flag("--optimize-memetic", optimize_memetic,
                 "run the memetic search on the base demand and freeze it");
    sc->add_option("--ga-params", ga_params_path, "search parameters (JSON)");
    sc->add_option("--weights", weights_path, "fitness weights (JSON)");

    auto* sw = app.add_subcommand("sweep", "omega / gamma parameter sweeps");
    sw->add_option("--param", param, "omega | gamma")->required();
    sw->add_option("--values", values_str, "comma list of parameter values")->required();
    sw->add_option("--repeats", repeats, "training repeats per value");
    sw->add_option("--line", line_path, "line config file")->required();
    sw->add_option("--demand", demand_path, "demand CSV")->required();
    sw->add_option("--agent", agent_path, "agent config (JSON)");

    auto* ab = app.add_subcommand("ablate", "train an alternative state/reward design");
    ab->add_option("--variant", variant, "scheme-one | scheme-two | drop-feature:...")
        ->required();
    ab->add_option("--line", line_path, "line config file")->required();
    ab->add_option("--demand", demand_path, "demand CSV")->required();
    ab->add_option("--agent", agent_path, "agent config (JSON)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    shared.seed_given = seed_opt->count() > 0;

    if (gen->parsed()) return cmd_gen_data(shared, spec_path);
    if (tr->parsed()) return cmd_train(shared, line_path, demand_path, agent_path, variant);
    if (ev->parsed()) return cmd_eval(shared, line_path, demand_path, timetable_path);
    if (sc->parsed())
        return cmd_scenario(shared, line_path, demand_path, transform, window_start, window_end,
                            parse_int_list(shifts_str), parse_double_list(rates_str), dqn_path,
                            ga_path, memetic_path, manual_path, optimize_ga, optimize_memetic,
                            ga_params_path, weights_path);
    if (sw->parsed())
        return cmd_sweep(shared, param, parse_double_list(values_str), repeats, line_path,
                         demand_path, agent_path);
    if (ab->parsed()) return cmd_ablate(shared, variant, line_path, demand_path, agent_path);
    return 1;
}

std::vector<std::string> rerun_argv_from_manifest(const std::filesystem::path& manifest_path,
                                                  const std::string& new_out) {
    json m = json::parse(read_file(manifest_path));
    std::vector<std::string> argv{m.at("command").get<std::string>()};
    const json& args = m.at("args");
    for (auto it = args.begin(); it != args.end(); ++it) {
        const std::string flag = "--" + it.key();
        const json& v = it.value();
        if (v.is_array()) {
            std::string list;
            for (const auto& e : v) {
                if (!list.empty()) list += ',';
                list += e.is_number_integer() ? fmt_int(e.get<long long>())
                                              : fmt_double(e.get<double>());
            }
            argv.push_back(flag);
            argv.push_back(list);
        } else if (v.is_string()) {
            argv.push_back(flag);
            argv.push_back(v.get<std::string>());
        } else if (v.is_number_integer()) {
            argv.push_back(flag);
            argv.push_back(fmt_int(v.get<long long>()));
        } else if (v.is_number_float()) {
            argv.push_back(flag);
            argv.push_back(fmt_double(v.get<double>()));
        } else if (v.is_boolean()) {
            if (v.get<bool>()) argv.push_back(flag);
        }
    }
    argv.push_back("--seed");
    argv.push_back(fmt_int(static_cast<long long>(m.at("seed").get<std::uint64_t>())));
    argv.push_back("--out");
    argv.push_back(new_out);
    return argv;
}

} // namespace headwayrl::cli
