#include <cstdio>
#include <exception>

#include "framebits/errors.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  try {
    return framebits::cli::run_cli(argc, argv);
  } catch (const framebits::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
