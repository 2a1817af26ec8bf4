#include "bundlesim/cli.hpp"

int main(int argc, char** argv) { return bundlesim::cli::run_cli(argc, argv); }
