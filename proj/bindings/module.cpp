#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "headwayrl/agent.hpp"
#include "headwayrl/baselines.hpp"
#include "headwayrl/commands.hpp"
#include "headwayrl/env.hpp"
#include "headwayrl/line_model.hpp"
#include "headwayrl/od_data.hpp"
#include "headwayrl/simulator.hpp"
#include "headwayrl/util.hpp"

namespace py = pybind11;
using namespace headwayrl;

namespace {

/// line config + travel table travel together on the python side
struct Line {
    LineConfig cfg;
    TravelTimeTable tt;
};

Line line_from_file(const std::string& path) {
    auto [cfg, tt] = load_line_file(path);
    tt.validate_no_overtake();
    return Line{cfg, std::move(tt)};
}

py::dict metrics_dict(const Metrics& m) {
    py::dict d;
    d["nd"] = m.nd;
    d["awt"] = m.awt;
    d["nsp"] = m.nsp;
    d["unserved"] = m.unserved;
    return d;
}

py::dict eval_dict(const EvalResult& r) {
    py::dict d = metrics_dict(r.metrics);
    py::list series;
    for (const auto& b : r.series) {
        py::dict bd;
        bd["minute_bucket"] = b.minute_bucket;
        bd["provided"] = b.provided;
        bd["consumed"] = b.consumed;
        series.append(bd);
    }
    d["capacity_series"] = series;
    return d;
}

/// env owning copies of its inputs so python lifetimes stay simple
class PyEnv {
public:
    PyEnv(const Line& line, const DemandSet& demand, const std::string& reward_json,
          const std::string& variant)
        : line_(line.cfg), tt_(line.tt), demand_(demand),
          params_(reward_params_from_json_text(reward_json.empty() ? "{}" : reward_json)),
          scheme_(make_scheme(variant)),
          env_(line_, tt_, demand_, params_, scheme_.get()) {}

    void reset() { env_.reset(); }
    std::vector<double> observe() { return env_.observe(); }

    py::dict step(int action) {
        StepResult r = env_.step(action);
        py::dict d;
        d["state"] = r.transition.s;
        d["action"] = r.transition.a;
        d["reward"] = r.transition.r;
        d["next_state"] = r.transition.s_next;
        d["done"] = r.transition.done;
        d["forced"] = r.forced;
        return d;
    }

    bool done() const { return env_.done(); }
    int minute() const { return env_.minute(); }
    int minutes_since_departure() const { return env_.minutes_since_departure(); }
    std::vector<int> departures() const { return env_.departures(); }
    std::vector<int> timetable() const { return env_.episode_to_timetable().minutes; }
    std::size_t state_dim() const { return env_.state_dim(); }

private:
    LineConfig line_;
    TravelTimeTable tt_;
    DemandSet demand_;
    RewardParams params_;
    std::unique_ptr<StateRewardScheme> scheme_;
    Env env_;
};

py::dict train_py(const Line& line, const DemandSet& demand, const std::string& agent_json,
                  const std::string& reward_json, const std::string& variant,
                  const std::string& checkpoint_path) {
    AgentConfig cfg = AgentConfig::from_json_text(agent_json.empty() ? "{}" : agent_json);
    RewardParams reward = reward_params_from_json_text(reward_json.empty() ? "{}" : reward_json);
    auto scheme = make_scheme(variant);
    TrainResult r = train(line.cfg, line.tt, demand, cfg, reward, scheme.get());
    if (!checkpoint_path.empty())
        save_checkpoint(r.network, cfg, reward, variant, checkpoint_path);

    py::dict d;
    py::list curve;
    for (const auto& e : r.curve) {
        py::dict ed;
        ed["episode"] = e.episode;
        ed["mean_reward"] = e.mean_reward;
        ed["nd"] = e.metrics.nd;
        ed["awt"] = e.metrics.awt;
        ed["nsp"] = e.metrics.nsp;
        curve.append(ed);
    }
    d["curve"] = curve;
    d["timetable"] = r.timetable.minutes;
    d["metrics"] = metrics_dict(r.final_eval.metrics);
    d["episodes_run"] = r.episodes_run;
    return d;
}

py::dict search_dict(const SearchResult& r) {
    py::dict d;
    d["timetable"] = r.best.minutes;
    d["fitness"] = r.best_fitness;
    py::list trace;
    for (const auto& p : r.trace) {
        py::dict pd;
        pd["generation"] = p.generation;
        pd["best"] = p.best;
        pd["mean"] = p.mean;
        trace.append(pd);
    }
    d["trace"] = trace;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "bus-line simulation and timetable learning core";

    py::class_<PassengerRecord>(m, "PassengerRecord")
        .def_readonly("id", &PassengerRecord::id)
        .def_readonly("arrival_minute", &PassengerRecord::arrival_minute)
        .def_readonly("origin_station", &PassengerRecord::origin_station)
        .def_readonly("destination_station", &PassengerRecord::destination_station);

    py::class_<DemandSet>(m, "DemandSet")
        .def_property_readonly("records",
                               [](const DemandSet& d) { return d.records; })
        .def_property_readonly("line_id", [](const DemandSet& d) { return d.line_id; })
        .def("__len__", [](const DemandSet& d) { return d.size(); });

    m.def("load_demand", [](const std::string& path, int stations) {
        return load_demand(path, kDemandCsvSchema, stations);
    }, py::arg("path"), py::arg("stations") = 0);
    m.def("save_demand", [](const DemandSet& d, const std::string& path) {
        save_demand(d, path);
    });
    m.def("generate_synthetic", [](const std::string& spec_json, std::uint64_t seed) {
        return generate_synthetic(SyntheticDemandSpec::from_json_text(spec_json), seed);
    }, py::arg("spec_json"), py::arg("seed"));
    m.def("shift_peak", &shift_peak, py::arg("demand"), py::arg("window_start"),
          py::arg("window_end"), py::arg("shift"));
    m.def("resample", &resample, py::arg("demand"), py::arg("rate"), py::arg("seed"));
    m.def("demand_to_csv", &demand_to_csv);

    py::class_<Line>(m, "Line")
        .def_property_readonly("stations", [](const Line& l) { return l.cfg.stations; })
        .def_property_readonly("seats", [](const Line& l) { return l.cfg.seats; })
        .def_property_readonly("capacity", [](const Line& l) { return l.cfg.capacity; })
        .def_property_readonly("service_start",
                               [](const Line& l) { return l.cfg.service_start; })
        .def_property_readonly("service_end", [](const Line& l) { return l.cfg.service_end; })
        .def_property_readonly("min_interval",
                               [](const Line& l) { return l.cfg.min_interval; })
        .def_property_readonly("max_interval",
                               [](const Line& l) { return l.cfg.max_interval; })
        .def("trip_capacity", [](const Line& l) { return trip_capacity(l.cfg); })
        .def("arrival_minute", [](const Line& l, double depart, int k) {
            return l.tt.arrival_minute(depart, k);
        });

    m.def("load_line", &line_from_file, py::arg("path"));
    m.def("line_from_json", [](const std::string& text) {
        LineConfig cfg = LineConfig::from_json_text(text);
        TravelTimeTable tt = text.find("travel_time_bands") != std::string::npos
                                 ? TravelTimeTable::from_json(text, cfg.stations)
                                 : TravelTimeTable::constant(cfg.stations, 2.0);
        tt.validate_no_overtake();
        return Line{cfg, std::move(tt)};
    });

    m.def("evaluate_timetable",
          [](const DemandSet& demand, const Line& line, const std::vector<int>& minutes) {
              return eval_dict(evaluate_timetable(demand, line.cfg, line.tt,
                                                  Timetable{minutes}));
          },
          py::arg("demand"), py::arg("line"), py::arg("minutes"));

    py::class_<PyEnv>(m, "Env")
        .def(py::init<const Line&, const DemandSet&, const std::string&, const std::string&>(),
             py::arg("line"), py::arg("demand"), py::arg("reward_json") = "",
             py::arg("variant") = "default")
        .def("reset", &PyEnv::reset)
        .def("observe", &PyEnv::observe)
        .def("step", &PyEnv::step, py::arg("action"))
        .def_property_readonly("done", &PyEnv::done)
        .def_property_readonly("minute", &PyEnv::minute)
        .def_property_readonly("minutes_since_departure", &PyEnv::minutes_since_departure)
        .def_property_readonly("state_dim", &PyEnv::state_dim)
        .def("departures", &PyEnv::departures)
        .def("timetable", &PyEnv::timetable);

    m.def("train", &train_py, py::arg("line"), py::arg("demand"), py::arg("agent_json") = "",
          py::arg("reward_json") = "", py::arg("variant") = "default",
          py::arg("checkpoint_path") = "");

    m.def("ga_optimize",
          [](const DemandSet& demand, const Line& line, const std::string& ga_json,
             const std::string& weights_json) {
              return search_dict(ga_optimize(
                  demand, line.cfg, line.tt,
                  GaParams::from_json_text(ga_json.empty() ? "{}" : ga_json),
                  FitnessWeights::from_json_text(weights_json.empty() ? "{}" : weights_json)));
          },
          py::arg("demand"), py::arg("line"), py::arg("ga_json") = "",
          py::arg("weights_json") = "");
    m.def("memetic_optimize",
          [](const DemandSet& demand, const Line& line, const std::string& ga_json,
             const std::string& weights_json) {
              return search_dict(memetic_optimize(
                  demand, line.cfg, line.tt,
                  GaParams::from_json_text(ga_json.empty() ? "{}" : ga_json),
                  FitnessWeights::from_json_text(weights_json.empty() ? "{}" : weights_json)));
          },
          py::arg("demand"), py::arg("line"), py::arg("ga_json") = "",
          py::arg("weights_json") = "");

    m.def("run_cli", &headwayrl::cli::run_cli, py::arg("args"),
          "run a CLI subcommand in-process; returns the exit code");

#ifdef HEADWAYRL_VERSION
    m.attr("__version__") = HEADWAYRL_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
