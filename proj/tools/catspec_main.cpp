#include "catspec/cli.hpp"

int main(int argc, char** argv) { return catspec::cli_main(argc, argv); }
