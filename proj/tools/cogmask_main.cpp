#include "cogmask/cli.hpp"

int main(int argc, char** argv) { return cogmask::cli::run(argc, argv); }
