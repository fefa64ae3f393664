#include "cli.hpp"

int main(int argc, char** argv) { return pendctl::cli::run(argc, argv); }
