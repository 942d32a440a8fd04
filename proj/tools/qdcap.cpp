#include "qdcap/cli.hpp"

int main(int argc, char** argv) { return qdcap::cli::run(argc, argv); }
