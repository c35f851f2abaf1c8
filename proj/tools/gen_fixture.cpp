// Writes simulated benign/DoS/GPS-spoofing flight exports plus annotations,
// category map and a pipeline.conf, for trying the CLI without real logs.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "support/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate simulated flight-log exports"};
  std::string dir;
  bool short_sessions = false;
  std::uint64_t seed = 7;
  app.add_option("dir", dir, "output directory")->required();
  app.add_flag("--short", short_sessions, "six-minute sessions instead of full-length ones");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  const auto cfg = uavids::testing::write_flight_fixture(
      dir, {.full_sessions = !short_sessions, .seed = seed});
  std::cout << cfg.string() << '\n';
  return 0;
}
