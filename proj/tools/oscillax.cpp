#include <CLI11.hpp>

#include <iostream>

#include "oscillax/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Oscillating viscoelastic solutions: exact checks, simulation, effective equations"};
  app.require_subcommand(1, 1);

  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  const char* modes[] = {"verify-exact", "simulate", "effective", "compare-homog"};
  const char* blurbs[] = {"check the exact oscillating solutions against their jump and weak forms",
                          "run the viscoelastic solver on oscillatory or smooth data",
                          "run the effective kinetic system",
                          "compare oscillating runs against the effective system as epsilon shrinks"};
  for (int i = 0; i < 4; ++i) {
    CLI::App* sub = app.add_subcommand(modes[i], blurbs[i]);
    sub->add_option("--config", config, "scenario file, TOML or JSON")->required();
    sub->add_option("--out", out, "output directory (overrides the file)");
    sub->add_option("--seed", seed, "random seed (overrides the file)");
    sub->add_option("--threads", threads, "worker threads (overrides the file)")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : oscillax::kExitConfig;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  std::optional<std::filesystem::path> out_dir;
  if (out) out_dir = *out;
  try {
    return oscillax::run(oscillax::parse_mode(chosen->get_name()), config, out_dir, seed, threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return oscillax::kExitFail;
  }
}
