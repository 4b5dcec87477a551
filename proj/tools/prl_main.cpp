#include "prl/cli.hpp"

int main(int argc, char** argv) { return prl::run_cli(argc, argv); }
