#include "l1indep/cli.hpp"

int main(int argc, char** argv) {
    return l1indep::run_cli(argc, argv);
}
