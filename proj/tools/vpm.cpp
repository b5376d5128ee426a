#include "vpm/cli.hpp"

int main(int argc, char** argv)
{
    return vpm::cli::run(argc, argv);
}
