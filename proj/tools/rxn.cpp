#include <CLI11.hpp>

#include <iostream>

#include "rxn/config.hpp"
#include "rxn/error.hpp"
#include "rxn/pipeline.hpp"

namespace {

int exit_status(rxn::ErrorCategory c) {
  switch (c) {
    case rxn::ErrorCategory::Usage:
      return 2;
    case rxn::ErrorCategory::Data:
      return 3;
    case rxn::ErrorCategory::Numerical:
      return 4;
  }
  return 3;
}

void report(const char* category, const std::string& message) {
  std::string flat = message;
  for (auto& ch : flat) {
    if (ch == '\n' || ch == '\t') ch = ' ';
  }
  std::cerr << "error\t" << category << "\t" << flat << "\n";
}

std::string key_table() {
  std::string out = "#key\tdefault\thelp\n";
  for (const auto& k : rxn::config_keys()) out += k.name + "\t" + k.default_value + "\t" + k.help + "\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enzyme reaction prediction pipeline"};
  app.set_version_flag("--version", std::string(rxn::kVersion));
  app.require_subcommand(1);

  std::string config_path, output_dir, mode;
  std::vector<std::string> overrides;
  bool quiet = false;

  for (const auto& name : rxn::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", overrides, "override one key: --set key=value")->take_all();
    sub->add_option("-o,--output-dir", output_dir, "shorthand for --set output_dir=DIR");
    sub->add_flag("-q,--quiet", quiet, "no progress lines on stderr");
    if (name == "ensemble") sub->add_option("--mode", mode, "dynamic, majority or recall_boost");
  }
  app.add_subcommand("keys", "list every configuration key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.what());
    return 2;
  }

  const auto* sub = app.get_subcommands().front();
  if (sub->get_name() == "keys") {
    std::cout << key_table();
    return 0;
  }

  try {
    auto cfg = config_path.empty() ? rxn::Config() : rxn::Config::load(config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw rxn::Error(rxn::ErrorCode::InvalidArgument, "--set expects key=value, got '" + o + "'");
      cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (!output_dir.empty()) cfg.set("output_dir", output_dir);
    if (!mode.empty()) cfg.set("ensemble_mode", mode);
    const auto res = rxn::run_command(sub->get_name(), cfg, quiet ? nullptr : &std::cerr);
    if (!quiet) std::cerr << sub->get_name() << ": wrote " << res.outputs.size() << " files and " << res.manifest.string() << "\n";
    return 0;
  } catch (const rxn::Error& e) {
    const auto c = rxn::category(e.code());
    report(rxn::to_string(c), std::string(rxn::to_string(e.code())) + ": " + e.what());
    return exit_status(c);
  } catch (const std::filesystem::filesystem_error& e) {
    report("data", std::string("Io: ") + e.what());
    return 3;
  } catch (const std::exception& e) {
    report("data", e.what());
    return 3;
  }
}
