// Command-line front end: prepare -> train -> detect -> eval -> report.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uavids/error.hpp"
#include "uavids/pipeline.hpp"

namespace {

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

int fail(std::string_view command, std::string_view kind, std::string_view message) {
  std::cerr << "error: command=" << (command.empty() ? "-" : command) << " kind=" << kind
            << " message=" << quote(message) << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised intrusion detection for UAV flight telemetry"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "pipeline configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed for pooling, splitting and training");
  app.add_option("--out", out_dir, "output directory (overrides `out`)");
  app.add_option("--set", overrides, "override a config key: key=value")->take_all();

  auto* prepare = app.add_subcommand("prepare", "select features, pool and scale every session");
  std::vector<std::string> test_starts;
  prepare->add_option("--test-start", test_starts,
                      "test-set start as HH:MM:SS (all attack sessions) or session=HH:MM:SS");
  auto* train = app.add_subcommand("train", "train the autoencoder on benign windows");
  std::vector<std::string> detect_sessions, eval_sessions;
  auto* detect = app.add_subcommand("detect", "score sessions and emit per-window verdicts");
  detect->add_option("--session", detect_sessions, "session ids (default: attack sessions)");
  auto* eval = app.add_subcommand("eval", "summarize detection quality against ground truth");
  eval->add_option("--session", eval_sessions, "session ids (default: attack sessions)");
  auto* report = app.add_subcommand("report", "write loss traces and distributions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("", "usage", e.what());
  }

  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    if (seed) overrides.push_back("seed=" + std::to_string(*seed));
    if (!out_dir.empty()) overrides.push_back("out=" + std::filesystem::absolute(out_dir).string());
    auto cfg = uavids::load_pipeline_config(config_path, overrides);

    if (sub == prepare) {
      for (const auto& ts : test_starts) {
        const auto eq = ts.find('=');
        if (eq == std::string::npos) {
          cfg.test_start.clear();
          for (const auto& info : uavids::load_annotations(cfg.annotations)) {
            if (info.annotation) cfg.test_start[info.session_id] = uavids::ClockTime::parse(ts);
          }
        } else {
          cfg.test_start[ts.substr(0, eq)] = uavids::ClockTime::parse(ts.substr(eq + 1));
        }
      }
      uavids::cmd_prepare(cfg, std::cout);
    } else if (sub == train) {
      uavids::cmd_train(cfg, std::cout);
    } else if (sub == detect) {
      uavids::cmd_detect(cfg, detect_sessions, std::cout);
    } else if (sub == eval) {
      uavids::cmd_eval(cfg, eval_sessions, std::cout);
    } else if (sub == report) {
      uavids::cmd_report(cfg, std::cout);
    }
  } catch (const uavids::Error& e) {
    return fail(command, uavids::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail(command, "internal", e.what());
  }
  return 0;
}
