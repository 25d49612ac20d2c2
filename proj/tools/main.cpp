#include "renewal/cli.hpp"

int main(int argc, char** argv) { return renewal::run_command(argc, argv); }
