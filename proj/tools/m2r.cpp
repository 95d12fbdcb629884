#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "m2r/commands.hpp"
#include "m2r/errors.hpp"
#include "m2r/run_config.hpp"

namespace {

// Command-line values that override the config file when given.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> lambda;
  std::optional<double> tau;
  std::optional<std::size_t> k;
  std::optional<std::size_t> n_max;
  std::optional<double> budget_s;
  std::optional<std::size_t> n_train;
  std::optional<std::size_t> n_test;
  std::optional<std::string> out_dir;
  std::optional<std::string> exports;
  bool no_timing = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "Run config file");
  cmd->add_option("--seed", o.seed, "Synthetic corpus seed");
  cmd->add_option("--mode", o.mode, "baseline, knn_only, icl_only, m2r, all or a comma list");
  cmd->add_option("--lambda", o.lambda, "kNN interpolation weight");
  cmd->add_option("--tau", o.tau, "kNN temperature");
  cmd->add_option("--k", o.k, "Token neighbors per step");
  cmd->add_option("--n-max", o.n_max, "Maximum prompts per utterance");
  cmd->add_option("--budget-s", o.budget_s, "Audio budget in seconds, test audio included");
  cmd->add_option("--n-train", o.n_train, "Synthetic training utterances");
  cmd->add_option("--n-test", o.n_test, "Synthetic test utterances");
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
  cmd->add_flag("--no-timing", o.no_timing, "Write zero wall times for reproducible outputs");
}

m2r::RunConfig resolve(const Overrides& o) {
  m2r::RunConfig cfg = o.config.empty() ? m2r::RunConfig{} : m2r::load_run_config(o.config);
  if (o.seed) cfg.synthetic.seed = *o.seed;
  if (o.mode) {
    cfg.modes = m2r::parse_modes(*o.mode);
    cfg.decode.mode = cfg.modes.back();
  }
  if (o.lambda) cfg.decode.knn.lambda = *o.lambda;
  if (o.tau) cfg.decode.knn.tau = *o.tau;
  if (o.k) cfg.decode.knn.k = *o.k;
  if (o.n_max) cfg.decode.n_max = *o.n_max;
  if (o.budget_s) cfg.decode.audio_budget_s = *o.budget_s;
  if (o.n_train) cfg.synthetic.n_train = *o.n_train;
  if (o.n_test) cfg.synthetic.n_test = *o.n_test;
  if (o.out_dir) cfg.output_dir = *o.out_dir;
  if (o.exports) cfg.exports = *o.exports;
  if (o.no_timing) cfg.timing = false;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented greedy ASR decoding"};
  app.require_subcommand(1);

  Overrides o;
  m2r::BuildOptions build_opts;
  std::optional<std::string> build_out;
  auto* build = app.add_subcommand("build", "Build sentence and token datastores");
  add_common(build, o);
  build->add_option("--kind", build_opts.kind, "sentence, token or both")
      ->check(CLI::IsMember({"sentence", "token", "both"}));
  build->add_option("--out", build_out, "Output file when building a single kind");
  build->add_option("--exports", o.exports, "Build from an utterance export file");

  auto* decode = app.add_subcommand("decode", "Decode the test set and write hypotheses");
  add_common(decode, o);

  m2r::TextEvalOptions text_opts;
  std::string ref, hyp, text_out;
  std::vector<std::string> tables;
  auto* eval = app.add_subcommand("eval", "Decode and score; or score transcript files");
  add_common(eval, o);
  eval->add_option("--ref", ref, "Reference transcripts (<id> <text> per line)");
  eval->add_option("--hyp", hyp, "Hypothesis transcripts (<id> <text> per line)");
  eval->add_option("--table", tables, "Normalization table, applied in the order given");

  std::optional<std::string> axis;
  std::optional<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Score one mode across a parameter range");
  add_common(sweep, o);
  sweep->add_option("--axis", axis, "n_max, lambda or tau");
  sweep->add_option("--values", values, "Comma-separated values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : m2r::kExitUsage;
  }

  return m2r::guarded(std::cerr, [&]() -> int {
    if (eval->parsed() && (!ref.empty() || !hyp.empty())) {
      if (ref.empty() || hyp.empty()) {
        throw m2r::Error(m2r::ErrorCode::kConfig, "text scoring needs both --ref and --hyp");
      }
      text_opts.ref = ref;
      text_opts.hyp = hyp;
      for (const auto& t : tables) text_opts.tables.emplace_back(t);
      if (o.out_dir) text_opts.out_dir = *o.out_dir;
      return m2r::cmd_eval_text(text_opts, std::cout);
    }
    m2r::RunConfig cfg = resolve(o);
    for (const auto& t : tables) cfg.normalize_tables.emplace_back(t);
    if (build->parsed()) {
      if (build_out) build_opts.out = *build_out;
      return m2r::cmd_build(cfg, build_opts, std::cout);
    }
    if (decode->parsed()) return m2r::cmd_decode(cfg, std::cout);
    if (eval->parsed()) return m2r::cmd_eval(cfg, std::cout);
    if (axis) cfg.sweep_axis = *axis;
    if (values) cfg.sweep_values = m2r::parse_number_list(*values);
    return m2r::cmd_sweep(cfg, std::cout);
  });
}
