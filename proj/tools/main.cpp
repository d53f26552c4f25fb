#include "rawgrl/cli.hpp"

int main(int argc, char** argv) { return rawgrl::run_cli(argc, argv); }
