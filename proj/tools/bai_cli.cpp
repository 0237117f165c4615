#include <string>
#include <vector>

#include <bai/cli.hpp>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return bai::cli::run(args);
}
