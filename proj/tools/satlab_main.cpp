#include "satlab/cli.hpp"

int main(int argc, char** argv) { return satlab::run_cli(argc, argv); }
