#include "fracising/cli.hpp"

int main(int argc, char** argv) { return fracising::cli::main(argc, argv); }
