// nsctl command-line driver. Links only the C interface.
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nsctl/nsctl.h"

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controllability toolkit for Galerkin-truncated 2D Navier-Stokes/Euler systems", "nsctl"};
  app.set_version_flag("--version", std::string(nsctl_version()));
  app.require_subcommand(1);

  Options opt;
  std::vector<std::string> names;
  std::istringstream ss(nsctl_commands());
  for (std::string n; ss >> n;) names.push_back(n);
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n);
    sub->add_option("--config", opt.config, "Run configuration (JSON)")->required();
    sub->add_option("--out", opt.out, "Output directory (default: config output_dir, else .)");
    sub->add_option("--seed", opt.seed, "Seed override (u64)");
    sub->add_flag("--quiet", opt.quiet, "Do not print the run summary");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "{\"error\":{\"kind\":\"usage\",\"exit_code\":1,\"message\":\"" << json_escape(e.what())
              << "\"}}\n";
    return 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const std::uint64_t seed = opt.seed.value_or(0);
  const int code = nsctl_run(command.c_str(), opt.config.c_str(), opt.out.empty() ? nullptr : opt.out.c_str(),
                             opt.seed ? &seed : nullptr);
  const std::string error = nsctl_last_error();
  if (!error.empty()) std::cerr << error << "\n";
  if (!opt.quiet && error.empty()) std::cout << nsctl_last_report() << "\n";
  return code;
}
