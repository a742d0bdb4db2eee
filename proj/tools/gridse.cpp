#include "gridse/harness.hpp"

int main(int argc, char** argv) { return gridse::cli_main(argc, argv); }
