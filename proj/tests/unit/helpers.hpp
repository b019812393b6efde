#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include "headwayrl/line_model.hpp"
#include "headwayrl/od_data.hpp"
#include "headwayrl/util.hpp"

namespace testutil {

inline std::filesystem::path temp_dir() {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("headwayrl_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    auto p = temp_dir() / name;
    headwayrl::atomic_write(p, content);
    return p;
}

inline headwayrl::LineConfig small_line(int stations = 3, int capacity = 45, int seats = 30) {
    headwayrl::LineConfig line;
    line.stations = stations;
    line.seats = seats;
    line.capacity = capacity;
    line.service_start = 0;
    line.service_end = 100;
    line.min_interval = 2;
    line.max_interval = 15;
    line.line_id = "t";
    return line;
}

inline headwayrl::PassengerRecord rec(const std::string& id, double arrival, int origin,
                                      int dest) {
    return headwayrl::PassengerRecord{id, arrival, origin, dest};
}

} // namespace testutil
