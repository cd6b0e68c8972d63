#include "omflow/cli.hpp"

int main(int argc, char** argv) { return omflow::cli::run(argc, argv); }
