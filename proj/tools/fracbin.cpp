#include "fracbin/cli.hpp"

int main(int argc, char** argv) { return fracbin::cli::run(argc, argv); }
