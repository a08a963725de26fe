#include "ongcmp/cli.hpp"

int main(int argc, char** argv) {
  try {
    return ongcmp::cli::run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
