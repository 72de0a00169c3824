#include <iostream>

#include "mrcp/cli.hpp"

int main(int argc, char** argv) {
    return mrcp::run_cli(argc, argv, std::cout, std::cerr);
}
