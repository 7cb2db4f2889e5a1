#include "rcpca/cli.hpp"

int main(int argc, char** argv) { return rcpca::cli_main(argc, argv); }
