#include "coralfit/commands.hpp"

int main(int argc, char** argv) { return coralfit::cli::run(argc, argv); }
