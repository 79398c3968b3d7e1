#include "orbitpde/cli.hpp"

int main(int argc, char** argv) { return orbitpde::run_cli(argc, argv); }
