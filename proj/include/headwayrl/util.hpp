#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace headwayrl {

/// Shortest round-trip decimal representation of a double ("12" stays "12",
/// "0.1" stays "0.1"). Used everywhere a double lands in a CSV/JSON artifact
/// so that re-runs are byte-identical.
std::string fmt_double(double v);

std::string fmt_int(long long v);

/// FNV-1a 64-bit digest, hex-encoded.
std::string fnv1a_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& p);

std::string read_file(const std::filesystem::path& p);

/// Write-temp-then-rename so partially written artifacts are never observed.
void atomic_write(const std::filesystem::path& p, std::string_view content);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

namespace log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

/// Level comes from HEADWAYRL_LOG (error|warn|info|debug), default warn.
Level threshold();
void write(Level lvl, const std::string& msg);

inline void error(const std::string& m) { write(Level::error, m); }
inline void warn(const std::string& m) { write(Level::warn, m); }
inline void info(const std::string& m) { write(Level::info, m); }
inline void debug(const std::string& m) { write(Level::debug, m); }

} // namespace log

} // namespace headwayrl
