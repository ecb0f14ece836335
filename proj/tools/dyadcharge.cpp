#include "dyadcharge/cli.hpp"

int main(int argc, char** argv) { return dyadcharge::cli::run(argc, argv); }
