#include "cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return canopyforge::cli::run_cli(argc, argv, std::cout, std::cerr);
}
