#include "episcan/cli.hpp"

int main(int argc, char** argv) { return episcan::run_cli(argc, argv); }
