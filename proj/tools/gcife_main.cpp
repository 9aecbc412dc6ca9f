#include "gcife/errors.hpp"
#include "gcife/study.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <optional>

int main(int argc, char** argv) {
  CLI::App app{"Conditioning, projection and SIPDG studies for GC-IFE spaces"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  std::optional<int> threads;
  for (const char* name : {"cond", "project", "solve"}) {
    CLI::App* sub = app.add_subcommand(name, fmt::format("run a {} study", name));
    sub->add_option("--config", config, "study config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (default: the config's out key)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    gcife::StudyConfig cfg = gcife::load_study_config(config);
    const gcife::StudyKind kind = gcife::parse_study_kind(app.get_subcommands().front()->get_name());
    if (cfg.text.find("study") != std::string::npos && cfg.kind != kind)
      fmt::print(stderr, "note: config declares a {} study, running {}\n", gcife::to_string(cfg.kind),
                 gcife::to_string(kind));
    cfg.kind = kind;
    if (threads) cfg.threads = *threads;
    const std::filesystem::path dir = out.empty() ? cfg.out_dir : std::filesystem::path(out);
    const gcife::StudyOutput res = gcife::run_study(cfg, dir);
    for (const auto& f : res.files) fmt::print("{}\n", f.string());
    fmt::print(stderr, "run {} finished in {:.2f} s\n", gcife::run_id(cfg), res.wall_seconds);
  } catch (const gcife::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
