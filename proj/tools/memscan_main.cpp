#include "memscan/harness.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return memscan::run_cli(argc, argv, std::cout, std::cerr);
}
