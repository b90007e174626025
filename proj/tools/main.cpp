#include "procrnn/cli.hpp"

int main(int argc, char** argv) { return procrnn::run_cli(argc, argv); }
