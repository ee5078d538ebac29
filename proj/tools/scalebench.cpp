#include "scalebench/cli.hpp"

int main(int argc, char** argv) {
    return scalebench::cli::run_cli(argc, argv);
}
