// qslrun.cpp — Command-line entry point

#include "qsl/experiment.hpp"

int main(int argc, char** argv) { return qsl::run_cli(argc, argv); }
