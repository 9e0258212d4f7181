#include "ddpred/cli.hpp"

int main(int argc, char** argv) { return ddpred::cli::main(argc, argv); }
