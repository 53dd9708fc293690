#include "fecg/cli.hpp"

int main(int argc, char** argv) { return fecg::cli::run(argc, argv); }
