#include "craftagent/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return craftagent::run_cli(args);
}
