#include "sdat/pipeline/commands.hpp"

int main(int argc, char** argv) { return sdat::pipeline::run_cli(argc, argv); }
