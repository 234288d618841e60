#include "trusteval/cli.hpp"

int main(int argc, char** argv) { return trusteval::run_cli(argc, argv); }
