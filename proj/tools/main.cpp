#include <string>
#include <vector>

#include "headwayrl/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return headwayrl::cli::run_cli(args);
}
