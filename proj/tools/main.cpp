#include "lifespace/cli.hpp"

#include <csignal>
#include <iostream>

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    return lifespace::run_cli(argc, argv, std::cout, std::cerr, g_stop);
}
