#include "runner.hpp"

int main(int argc, char** argv) { return colltraj::cli::main_entry(argc, argv); }
