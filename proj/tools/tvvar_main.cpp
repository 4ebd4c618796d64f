#include "tvvar/cli.hpp"

int main(int argc, char** argv) { return tvvar::run_cli(argc, argv); }
