#include "commands.hpp"

int main(int argc, char** argv) { return maxsketch::cli::run(argc, argv); }
