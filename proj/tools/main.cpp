#include "cli.hpp"

int main(int argc, char** argv) { return jifr::cli::run(argc, argv); }
