#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace headwayrl::cli {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Entry point behind the binary. Parses the subcommand and options, runs
/// it, and returns the process exit code (0 iff every requested artifact
/// was written).
int run_cli(const std::vector<std::string>& args);

/// Rebuild the exact argv of a recorded run, pointed at a new output
/// directory. Re-running it reproduces every output byte for byte.
std::vector<std::string> rerun_argv_from_manifest(const std::filesystem::path& manifest_path,
                                                  const std::string& new_out);

} // namespace headwayrl::cli
