#include "metamodel/cli.hpp"

int main(int argc, char** argv) { return metamodel::cli::run(argc, argv); }
