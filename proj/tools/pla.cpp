#include "pla/cli/commands.hpp"

int main(int argc, char** argv) { return pla::cli::run_cli(argc, argv); }
