#include "stencilwa/cli.hpp"

int main(int argc, char** argv) { return stencilwa::run_cli(argc, argv); }
