#include "relct/cli.hpp"

int main(int argc, char** argv) { return relct::cli::run(argc, argv); }
