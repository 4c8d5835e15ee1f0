#include <iostream>

#include "qmest/cli.hpp"

int main(int argc, char** argv) {
    return qmest::cli::run(argc, argv, std::cin, std::cout, std::cerr);
}
