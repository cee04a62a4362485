#include "tsinr/commands.hpp"

int main(int argc, char** argv) { return tsinr::run_cli(argc, argv); }
