#include "kdiff/cli.hpp"

int main(int argc, char** argv) { return kdiff::run_cli(argc, argv); }
