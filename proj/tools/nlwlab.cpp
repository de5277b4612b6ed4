#include "nlw/cli.hpp"

int main(int argc, char** argv) { return nlw::cli_main(argc, argv); }
