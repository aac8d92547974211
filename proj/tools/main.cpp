#include "tightfeed/cli.hpp"

int main(int argc, char** argv) { return tightfeed::cli::run(argc, argv); }
