#include "conan/cli.hpp"

int main(int argc, char** argv) { return conan::run(argc, argv); }
