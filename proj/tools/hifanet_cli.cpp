#include "hifanet_cli.hpp"

int main(int argc, char** argv) { return hifanet::cli::run(argc, argv); }
