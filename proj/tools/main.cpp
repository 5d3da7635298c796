#include "dyn/cli.hpp"

int main(int argc, char** argv) { return dyn::cli_main(argc, argv); }
