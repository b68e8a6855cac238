#include "ricochet/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return ricochet::cli::run(argc, argv, std::cout, std::cerr);
}
