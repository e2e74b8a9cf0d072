#include "p2s/cli.hpp"

int main(int argc, char** argv) { return p2s::run_cli(argc, argv); }
