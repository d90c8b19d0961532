#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "fmparts/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a planted synthetic corpus (stacks, images, manifest, config)"};
  std::string out_dir;
  int count = 20;
  std::uint64_t seed = 1;
  bool tail = false;
  app.add_option("--out", out_dir, "Corpus directory")->required();
  app.add_option("--count", count, "Number of scenes")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Seed of the first scene")->capture_default_str();
  app.add_flag("--tail-bias", tail, "Give each bird a weakly activated tail");
  CLI11_PARSE(app, argc, argv);
  try {
    fmparts::synth::SceneOptions options;
    options.tail_bias = tail;
    const auto manifest = fmparts::synth::write_corpus(out_dir, count, seed, options);
    std::printf("wrote %zu scenes to %s\n", manifest.entries.size(), out_dir.c_str());
    return 0;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
}
