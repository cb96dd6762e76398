#include "sslstm/cli.hpp"

int main(int argc, char** argv) { return sslstm::cli::run(argc, argv); }
