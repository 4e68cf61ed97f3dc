#include "srec/harness.hpp"

int main(int argc, char** argv) { return srec::cli_main(argc, argv); }
