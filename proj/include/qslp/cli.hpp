#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qslp {

struct RunConfig {
  std::string command;  // simulate | reproduce | sweep | events | analyze
  std::string target;   // figure name for reproduce
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // key=value, applied after the file
};

// Throws ConfigError on malformed arguments. Returns nullopt when help was
// printed and nothing should run.
std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out);

// Exit status: 0 success, 1 configuration or domain error, 2 numerical failure.
int dispatch(const RunConfig& run, std::ostream& out, std::ostream& err);

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qslp
