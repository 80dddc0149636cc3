#include "minkgs/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return minkgs::cli::run(argc, argv, std::cout, std::cerr);
}
