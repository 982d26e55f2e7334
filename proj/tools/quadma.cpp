#include "quadma/cli.hpp"

int main(int argc, char** argv) { return quadma::cli::main(argc, argv); }
