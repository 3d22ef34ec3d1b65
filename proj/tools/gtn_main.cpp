#include "gtn/cli.hpp"

int main(int argc, char** argv) { return gtn::cli_main(argc, argv); }
