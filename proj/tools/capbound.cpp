#include "capbound/cli.hpp"

int main(int argc, char** argv) { return capbound::cli::run_cli(argc, argv); }
