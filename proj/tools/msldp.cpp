#include "msldp/cli.hpp"

int main(int argc, char** argv) { return msldp::cli::dispatch(argc, argv); }
