#include "drsam/cli.hpp"

int main(int argc, char** argv) { return drsam::run_cli(argc, argv); }
