#include "zsl/cli.hpp"

int main(int argc, char** argv) { return zsl::run_cli(argc, argv); }
