// Writes fixture-backend responses for the prompt chain, one per
// (kernel, arch, step) the corpus covers. Each response wraps the matching
// corpus source, so an offline `gen` reproduces the corpus byte for byte.
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "joulebench/corpus.hpp"
#include "joulebench/data_dir.hpp"
#include "joulebench/errors.hpp"
#include "joulebench/prompt_catalog.hpp"

using namespace joulebench;
namespace fs = std::filesystem;

namespace {

std::string response_for(const KernelSpec& kernel, VariantKind kind, TargetArch arch,
                         const std::string& source) {
  std::string text = "Here is the " + std::string(to_string(kind)) + " version of `" + kernel.name +
                     "` for " + std::string(to_string(arch)) + ":\n\n```c\n" + source + "```\n";
  if (uses_openmp(kind)) {
    text += "\nCompile with OpenMP enabled, for example:\n\n```sh\ncc -O2 -fopenmp";
    for (const auto& f : default_flags(kind, arch)) {
      if (f != "-O2" && f != "-fopenmp") text += " " + f;
    }
    text += " -fPIC -shared -o " + kernel.name + ".so " + kernel.name + ".c\n```\n";
  }
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regenerate offline fixtures from the corpus"};
  std::string catalog_path = default_catalog_path().string();
  std::string corpus_dir = default_corpus_dir().string();
  std::string out_dir = (data_dir() / "fixtures").string();
  app.add_option("--catalog", catalog_path);
  app.add_option("--corpus", corpus_dir);
  app.add_option("--out", out_dir);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto catalog = load_catalog(catalog_path);
    const auto manifest = corpus_manifest(corpus_dir);
    fs::create_directories(out_dir);
    nlohmann::json index = nlohmann::json::object();

    for (const auto& kernel : builtin_kernels()) {
      for (auto arch : {TargetArch::ARM64, TargetArch::AMD64}) {
        std::optional<std::string> prior;
        for (int step = kFirstStep; step <= kLastStep; ++step) {
          const auto kind = kind_for_step(step, arch);
          const auto* entry = find_entry(manifest, kernel.id, kind, arch);
          const auto* tmpl = catalog.find(kind, arch);
          if (!entry || !tmpl) break;
          const auto source = read_source(*entry);
          const auto prompt = render_prompt(*tmpl, kernel, arch, prior);
          const auto hash = prompt_hash(prompt);
          std::ofstream out(fs::path(out_dir) / (hash + ".txt"), std::ios::binary | std::ios::trunc);
          out << response_for(kernel, kind, arch, source);
          index[hash] = kernel.name + " step " + std::to_string(step) + " (" +
                        std::string(to_string(kind)) + ", " + std::string(to_string(arch)) +
                        ", template " + tmpl->id + " v" + std::to_string(tmpl->version) +
                        ") <- corpus/" + entry->relative_path;
          prior = source;
        }
      }
    }
    std::ofstream(fs::path(out_dir) / "index.json", std::ios::trunc) << index.dump(2) << "\n";
    std::cout << "wrote " << index.size() << " fixtures to " << out_dir << "\n";
  } catch (const Error& e) {
    std::cerr << e.stage() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
