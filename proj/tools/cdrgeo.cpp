#include "cdrgeo/cli.hpp"

int main(int argc, char** argv) { return cdrgeo::run_cli(argc, argv); }
