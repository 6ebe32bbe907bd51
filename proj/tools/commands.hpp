#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace dce::cli {

/// Parsed command line. Flags override the matching config values.
struct Invocation {
  std::string command;
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> draws;
  std::optional<std::string> out;
  std::optional<std::string> subgroup;
  std::optional<std::string> model;
  std::optional<std::string> data;
  std::optional<std::string> fit;
  std::optional<std::string> direction;
  std::optional<std::size_t> bootstrap;
  unsigned threads = 1;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRecoveryFailed = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNotConverged = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitInternal = 70;

/// Runs one subcommand. Progress goes to `out`; failures are reported on
/// `err` as one JSON line and mapped to an exit code.
int run(const Invocation& invocation, std::ostream& out, std::ostream& err);

/// Full entry point: argument parsing plus run().
int main(int argc, char** argv);

}  // namespace dce::cli
