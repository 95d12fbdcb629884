#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "m2r/metrics.hpp"
#include "m2r/normalize.hpp"
#include "m2r/pipeline.hpp"
#include "m2r/run_config.hpp"
#include "m2r/sentence_icl.hpp"
#include "m2r/synthetic.hpp"
#include "m2r/token_knn.hpp"
#include "m2r/toy_model.hpp"

namespace m2r {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;    // bad flags or configuration
inline constexpr int kExitRuntime = 3;  // failures while running

// Everything needed to decode the synthetic test split.
struct Experiment {
  SyntheticBenchmark bench;
  std::unique_ptr<ToyModel> model;
  std::unique_ptr<SentenceDatastore> sentence_store;
  std::unique_ptr<TokenDatastore> token_store;
  std::unique_ptr<CorpusAudioSource> prompt_audio;
  References refs;
  Normalizer normalizer;

  BatchInputs inputs() const;
};

// The configured decode settings with the effective max_decode_len.
DecodeConfig resolved_decode_config(const RunConfig& cfg);

// Builds or loads whichever stores the configured modes need.
Experiment prepare_experiment(const RunConfig& cfg, std::ostream& log);

struct ModeRun {
  DecodeMode mode;
  BatchOutcome outcome;
  EvalReport report;
};

ModeRun run_mode(const Experiment& exp, const DecodeConfig& config);

struct BuildOptions {
  std::string kind = "both";  // sentence | token | both
  std::optional<std::filesystem::path> out;  // single-kind output file
};

struct TextEvalOptions {
  std::filesystem::path ref;
  std::filesystem::path hyp;
  std::vector<std::filesystem::path> tables;
  std::optional<std::filesystem::path> out_dir;
};

int cmd_build(const RunConfig& cfg, const BuildOptions& opts, std::ostream& out);
int cmd_decode(const RunConfig& cfg, std::ostream& out);
int cmd_eval(const RunConfig& cfg, std::ostream& out);
int cmd_eval_text(const TextEvalOptions& opts, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out);

// Reads "<id> <text>" lines; the text may be empty.
std::vector<std::pair<std::string, std::string>> read_transcripts(
    const std::filesystem::path& path);

int exit_code_for(const std::exception& e) noexcept;
void report_error(std::ostream& err, const std::exception& e);

// Runs `fn`, reporting any exception on `err` and mapping it to an exit code.
template <typename F>
int guarded(std::ostream& err, F&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    report_error(err, e);
    return exit_code_for(e);
  }
}

}  // namespace m2r
