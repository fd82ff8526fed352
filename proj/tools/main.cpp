#include "fleetmx/cli.hpp"

int main(int argc, char** argv) { return fleetmx::cli::run(argc, argv); }
