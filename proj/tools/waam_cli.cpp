#include "waam/cli.hpp"

int main(int argc, char** argv) { return waam::cli::main(argc, argv); }
