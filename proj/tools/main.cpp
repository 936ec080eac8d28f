#include "poselift/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return poselift::cli_dispatch(std::move(args));
}
