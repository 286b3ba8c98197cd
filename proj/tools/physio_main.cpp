#include <exception>
#include <iostream>

#include "physio/cli/cli.hpp"
#include "physio/errors.hpp"

int main(int argc, char** argv) {
  try {
    return physio::cli::run(argc, argv);
  } catch (const physio::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const physio::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
