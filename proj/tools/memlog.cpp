#include "memlog/cli.hpp"

int main(int argc, char** argv) { return memlog::run_cli(argc, argv); }
