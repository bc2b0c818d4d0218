#include "lmcf/cli.hpp"

int main(int argc, char** argv) { return lmcf::cli_main(argc, argv); }
