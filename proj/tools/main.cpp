#include "chainflow/cli.hpp"

int main(int argc, char** argv) { return chainflow::run_cli(argc, argv); }
