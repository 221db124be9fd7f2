#include "hexmap/cli.hpp"

int main(int argc, char** argv) { return hexmap::cli::run_main(argc, argv); }
