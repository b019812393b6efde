"""Bus-line simulation and rule-constrained DQN timetable learning toolkit."""

from headwayrl._core import (  # noqa: F401
    DemandSet,
    Env,
    Line,
    PassengerRecord,
    __version__,
    demand_to_csv,
    evaluate_timetable,
    ga_optimize,
    generate_synthetic,
    line_from_json,
    load_demand,
    load_line,
    memetic_optimize,
    resample,
    run_cli,
    save_demand,
    shift_peak,
    train,
)
