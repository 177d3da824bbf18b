#include "twrelay/cli.hpp"

int main(int argc, char** argv) {
  return twrelay::cli::main_entry(argc, argv);
}
