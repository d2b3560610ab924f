#include "cli.hpp"

int main(int argc, char** argv) { return mgrestore::cli::run(argc, argv); }
