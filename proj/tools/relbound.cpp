#include "relbound/cli.hpp"

int main(int argc, char** argv) { return relbound::cli::main(argc, argv); }
