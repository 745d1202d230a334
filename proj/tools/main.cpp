#include "cli.hpp"

int main(int argc, char** argv) { return thetakit::cli::run(argc, argv); }
