#include "cli_app.hpp"

int main(int argc, char** argv) {
    return gcb::cli::run(argc, argv);
}
