#include "ddslit/cli.hpp"

int main(int argc, char** argv) { return ddslit::cli::run(argc, argv); }
