#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "certfraud/cli.hpp"

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  std::vector<std::string> args(argv + 1, argv + argc);
  return certfraud::cli::run(args, std::cout, std::cerr);
}
