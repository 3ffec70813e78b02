#include "lfkit/cli.hpp"

int main(int argc, char** argv) { return lfkit::run_cli(argc, argv); }
