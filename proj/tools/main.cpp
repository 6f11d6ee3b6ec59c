#include "relact/cli.hpp"

int main(int argc, char** argv) { return relact::run_cli(argc, argv); }
