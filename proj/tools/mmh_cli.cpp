#include <iostream>

#include "mmh/cli.hpp"

int main(int argc, char** argv)
{
    return mmh::cli::run(argc, argv, std::cout, std::cerr);
}
