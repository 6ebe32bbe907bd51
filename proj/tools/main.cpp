#include "commands.hpp"

int main(int argc, char** argv) { return dce::cli::main(argc, argv); }
