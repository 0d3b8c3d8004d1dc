#include "pdflow/cli.hpp"

int main(int argc, char** argv) { return pdflow::run_cli(argc, argv); }
