#include <string>
#include <vector>

#include "top/cli/app.hpp"

int main(int argc, char** argv) {
    return top::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
