#include "invot/cli.hpp"

int main(int argc, char** argv) { return invot::cli::run(argc, argv); }
