#include "fshc/cli.hpp"

int main(int argc, char** argv) { return fshc::cli::run(argc, argv); }
