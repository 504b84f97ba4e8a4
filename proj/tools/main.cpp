#include "mps/scenario_io.hpp"

int main(int argc, char** argv) { return mps::io::cli_main(argc, argv); }
