#include "gcmopt/cli.hpp"

int main(int argc, char** argv) { return gcmopt::cli::main(argc, argv); }
