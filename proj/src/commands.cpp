#include "m2r/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "m2r/errors.hpp"
#include "m2r/exports.hpp"
#include "m2r/storage.hpp"

namespace m2r {

namespace {

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream open_output(const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

bool needs_sentence(const std::vector<DecodeMode>& modes) {
  return std::any_of(modes.begin(), modes.end(), [](DecodeMode m) { return uses_icl(m); });
}

bool needs_token(const std::vector<DecodeMode>& modes) {
  return std::any_of(modes.begin(), modes.end(), [](DecodeMode m) { return uses_knn(m); });
}

void report_skipped(std::ostream& out, const std::vector<BuildFailure>& skipped) {
  for (const auto& s : skipped) out << "skipped " << s.utterance_id << ": " << s.message << '\n';
}

Normalizer load_normalizer(const std::vector<fs::path>& tables) {
  Normalizer n;
  for (const auto& t : tables) n.add_table(MappingTable::load(t));
  return n;
}

// Top-1 self-retrieval over the first entries; a stored key must find an
// entry at distance zero.
std::size_t self_retrieval_hits(const SentenceDatastore& store, std::size_t probes) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probes; ++i) {
    const auto nn = store.index().query_topk(store.index().keys().row(i), 1);
    hits += !nn.empty() && nn.front().distance == 0.0;
  }
  return hits;
}

void validate_sweep(const RunConfig& cfg) {
  if (cfg.sweep_values.empty()) {
    throw Error(ErrorCode::kConfig, "sweep needs at least one value");
  }
  if (cfg.modes.size() != 1) {
    throw Error(ErrorCode::kConfig, "sweep runs exactly one decode mode");
  }
  for (double v : cfg.sweep_values) {
    const std::string s = format_fixed(v, 6);
    if (cfg.sweep_axis == "n_max") {
      if (v < 0 || v != std::floor(v)) {
        throw Error(ErrorCode::kConfig, "n_max value " + s + " is not a non-negative integer");
      }
    } else if (cfg.sweep_axis == "lambda") {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::kConfig, "lambda value " + s + " is outside [0, 1]");
      }
    } else if (cfg.sweep_axis == "tau") {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::kConfig, "tau value " + s + " must be positive");
      }
    } else {
      throw Error(ErrorCode::kConfig,
                  "unknown sweep axis '" + cfg.sweep_axis + "' (n_max, lambda or tau)");
    }
  }
}

std::string format_value(const std::string& axis, double v) {
  if (axis == "n_max") return std::to_string(static_cast<std::size_t>(v));
  std::ostringstream os;
  os << v;
  return os.str();
}

void print_failures(std::ostream& out, const BatchOutcome& outcome) {
  for (const auto& f : outcome.failures) {
    out << "failed " << f.utterance_id << ": " << f.message << '\n';
  }
}

}  // namespace

BatchInputs Experiment::inputs() const {
  return {model.get(), &bench.test, sentence_store.get(), prompt_audio.get(), token_store.get()};
}

DecodeConfig resolved_decode_config(const RunConfig& cfg) {
  DecodeConfig d = cfg.decode;
  d.max_decode_len = effective_max_decode_len(cfg);
  return d;
}

Experiment prepare_experiment(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  Experiment exp;
  exp.normalizer = load_normalizer(cfg.normalize_tables);
  exp.bench = make_synthetic_benchmark(cfg.synthetic);
  exp.model = std::make_unique<ToyModel>(exp.bench.model_config);
  exp.prompt_audio = std::make_unique<CorpusAudioSource>(exp.bench.train);
  for (const auto& u : exp.bench.test) exp.refs[u.id] = to_symbols(u.tokens);

  const ModelInfo info = exp.model->info();
  const OnError on_error = cfg.decode.on_error;
  if (needs_sentence(cfg.modes)) {
    if (cfg.sentence_store) {
      exp.sentence_store =
          std::make_unique<SentenceDatastore>(load_sentence_datastore(*cfg.sentence_store));
      if (exp.sentence_store->dim() != info.encoder_dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "sentence store dimension " + std::to_string(exp.sentence_store->dim()) +
                        " does not match the encoder (" + std::to_string(info.encoder_dim) + ")");
      }
    } else {
      auto built = build_sentence_datastore(*exp.model, exp.bench.train, on_error);
      report_skipped(log, built.skipped);
      exp.sentence_store = std::make_unique<SentenceDatastore>(std::move(built.store));
    }
  }
  if (needs_token(cfg.modes)) {
    if (cfg.token_store) {
      exp.token_store = std::make_unique<TokenDatastore>(load_token_datastore(*cfg.token_store));
      if (exp.token_store->dim() != info.tap_dim ||
          exp.token_store->vocab_size() != info.vocab_size) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "token store shape does not match the model tap and vocabulary");
      }
    } else {
      auto built = build_token_datastore(*exp.model, exp.bench.train, on_error);
      report_skipped(log, built.skipped);
      exp.token_store = std::make_unique<TokenDatastore>(std::move(built.store));
    }
  }
  return exp;
}

ModeRun run_mode(const Experiment& exp, const DecodeConfig& config) {
  ModeRun run{config.mode, run_batch(exp.inputs(), config), {}};
  run.report = build_report(run.outcome.results, exp.refs, exp.normalizer);
  return run;
}

int cmd_build(const RunConfig& cfg, const BuildOptions& opts, std::ostream& out) {
  cfg.validate();
  const bool sentence = opts.kind == "sentence" || opts.kind == "both";
  const bool token = opts.kind == "token" || opts.kind == "both";
  if (!sentence && !token) {
    throw Error(ErrorCode::kConfig, "build kind must be sentence, token or both");
  }
  if (opts.out && sentence && token) {
    throw Error(ErrorCode::kConfig, "--out names one file; pick --kind sentence or token");
  }

  std::shared_ptr<const AsrModel> model;
  Corpus corpus;
  if (cfg.exports) {
    auto imported = import_exports(*cfg.exports);
    model = imported.model;
    corpus = std::move(imported.corpus);
    out << "source: " << cfg.exports->string() << " (" << corpus.size() << " utterances)\n";
  } else {
    auto bench = make_synthetic_benchmark(cfg.synthetic);
    model = std::make_shared<const ToyModel>(bench.model_config);
    corpus = std::move(bench.train);
    out << "source: synthetic seed " << cfg.synthetic.seed << " (" << corpus.size()
        << " utterances)\n";
  }

  const auto target = [&](const char* name) {
    return opts.out ? *opts.out : cfg.output_dir / (std::string(name) + ".m2rd");
  };
  if (sentence) {
    const auto t0 = std::chrono::steady_clock::now();
    auto built = build_sentence_datastore(*model, corpus, cfg.decode.on_error);
    report_skipped(out, built.skipped);
    const fs::path path = target("sentence");
    ensure_parent(path);
    save_datastore(built.store, path);
    out << "sentence datastore: count=" << built.store.size() << " dim=" << built.store.dim()
        << " -> " << path.string() << '\n';
    const std::size_t probes = std::min<std::size_t>(8, built.store.size());
    out << "self-retrieval: " << self_retrieval_hits(built.store, probes) << '/' << probes << '\n';
    if (cfg.timing) out << "build_time_s=" << format_fixed(seconds_since(t0), 3) << '\n';
  }
  if (token) {
    const auto t0 = std::chrono::steady_clock::now();
    auto built = build_token_datastore(*model, corpus, cfg.decode.on_error);
    report_skipped(out, built.skipped);
    const fs::path path = target("token");
    ensure_parent(path);
    save_datastore(built.store, path);
    out << "token datastore: count=" << built.store.size() << " dim=" << built.store.dim()
        << " -> " << path.string() << '\n';
    if (cfg.timing) out << "build_time_s=" << format_fixed(seconds_since(t0), 3) << '\n';
  }
  return kExitOk;
}

int cmd_decode(const RunConfig& cfg, std::ostream& out) {
  const Experiment exp = prepare_experiment(cfg, out);
  for (DecodeMode mode : cfg.modes) {
    DecodeConfig dc = resolved_decode_config(cfg);
    dc.mode = mode;
    const BatchOutcome outcome = run_batch(exp.inputs(), dc);
    print_failures(out, outcome);
    const fs::path path = cfg.output_dir / (std::string("hyp_") + to_string(mode) + ".txt");
    auto file = open_output(path);
    for (const auto& r : outcome.results) {
      file << r.utterance_id << '\t' << r.n_prompts_used << '\t' << tokens_to_text(r.hypothesis)
           << '\n';
    }
    out << to_string(mode) << ": " << outcome.results.size() << " decoded, "
        << outcome.failures.size() << " failed -> " << path.string() << '\n';
  }
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  RunConfig run_cfg = cfg;
  if (std::find(run_cfg.modes.begin(), run_cfg.modes.end(), DecodeMode::kBaseline) ==
      run_cfg.modes.end()) {
    run_cfg.modes.insert(run_cfg.modes.begin(), DecodeMode::kBaseline);
  }
  const Experiment exp = prepare_experiment(run_cfg, out);
  const ReportOptions ropts{cfg.timing};

  std::vector<ModeRun> runs;
  for (DecodeMode mode : run_cfg.modes) {
    DecodeConfig dc = resolved_decode_config(run_cfg);
    dc.mode = mode;
    runs.push_back(run_mode(exp, dc));
    const ModeRun& run = runs.back();
    print_failures(out, run.outcome);
    const std::string name = to_string(mode);
    auto csv = open_output(cfg.output_dir / ("report_" + name + ".csv"));
    write_report_csv(csv, run.report, ropts);
    auto summary = open_output(cfg.output_dir / ("summary_" + name + ".txt"));
    write_summary(summary, run.report, name, ropts);
  }

  const auto base = std::find_if(runs.begin(), runs.end(),
                                 [](const ModeRun& r) { return r.mode == DecodeMode::kBaseline; });
  const double base_cer = base->report.aggregate_cer;
  auto comparison = open_output(cfg.output_dir / "comparison.csv");
  comparison << "mode,utterances,ref_len,S,D,I,cer,rr,rtf\n";
  out << std::left << std::setw(10) << "mode" << std::right << std::setw(8) << "cer"
      << std::setw(8) << "rr" << std::setw(7) << "S" << std::setw(7) << "D" << std::setw(7)
      << "I" << std::setw(11) << "rtf" << '\n';
  for (const auto& run : runs) {
    const auto& a = run.report.aggregate_counts;
    const std::string rr =
        base_cer > 0.0 ? format_fixed(relative_reduction(base_cer, run.report.aggregate_cer), 2)
                       : "nan";
    const std::string rtf = format_fixed(cfg.timing ? run.report.rtf : 0.0, 6);
    comparison << to_string(run.mode) << ',' << run.report.per_utterance.size() << ','
               << a.ref_len << ',' << a.substitutions << ',' << a.deletions << ','
               << a.insertions << ',' << format_fixed(run.report.aggregate_cer, 4) << ',' << rr
               << ',' << rtf << '\n';
    out << std::left << std::setw(10) << to_string(run.mode) << std::right << std::setw(8)
        << format_fixed(run.report.aggregate_cer, 2) << std::setw(8) << rr << std::setw(7)
        << a.substitutions << std::setw(7) << a.deletions << std::setw(7) << a.insertions
        << std::setw(11) << rtf << '\n';
  }
  out << "reports -> " << cfg.output_dir.string() << '\n';
  return kExitOk;
}

std::vector<std::pair<std::string, std::string>> read_transcripts(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "transcript file not found: " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    const auto gap = line.find_first_of(" \t", start);
    std::string id = line.substr(start, gap - start);
    std::string text;
    if (gap != std::string::npos) {
      const auto t = line.find_first_not_of(" \t", gap);
      if (t != std::string::npos) text = line.substr(t);
    }
    out.emplace_back(std::move(id), std::move(text));
  }
  return out;
}

int cmd_eval_text(const TextEvalOptions& opts, std::ostream& out) {
  for (const auto* p : {&opts.ref, &opts.hyp}) {
    if (!fs::exists(*p)) throw Error(ErrorCode::kConfig, "file not found: " + p->string());
  }
  for (const auto& t : opts.tables) {
    if (!fs::exists(t)) throw Error(ErrorCode::kConfig, "normalization table not found: " + t.string());
  }
  const Normalizer normalizer = load_normalizer(opts.tables);
  // Whitespace is dropped before scoring.
  const auto symbols = [](const std::string& text) {
    SymbolSeq s = utf8_decode(text);
    std::erase_if(s, [](Symbol c) { return c == ' ' || c == '\t' || c == 0x3000; });
    return s;
  };

  References refs;
  std::vector<std::string> order;
  for (auto& [id, text] : read_transcripts(opts.ref)) {
    if (!refs.emplace(id, symbols(text)).second) {
      throw Error(ErrorCode::kFormat, "duplicate reference id '" + id + "'");
    }
    order.push_back(id);
  }
  std::unordered_map<std::string, SymbolSeq> hyps;
  for (auto& [id, text] : read_transcripts(opts.hyp)) {
    if (!refs.contains(id)) {
      throw Error(ErrorCode::kMissingReference, "no reference for hypothesis '" + id + "'");
    }
    hyps[id] = symbols(text);
  }
  // Reference order; an utterance without a hypothesis scores as empty output.
  std::vector<DecodeResult> results;
  for (const auto& id : order) {
    DecodeResult r;
    r.utterance_id = id;
    const auto it = hyps.find(id);
    if (it != hyps.end()) r.hypothesis.assign(it->second.begin(), it->second.end());
    results.push_back(std::move(r));
  }
  const EvalReport report = build_report(results, refs, normalizer);
  const ReportOptions ropts{false};
  write_summary(out, report, "text", ropts);
  if (opts.out_dir) {
    auto csv = open_output(*opts.out_dir / "report.csv");
    write_report_csv(csv, report, ropts);
    auto summary = open_output(*opts.out_dir / "summary.txt");
    write_summary(summary, report, "text", ropts);
  }
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  validate_sweep(cfg);
  const Experiment exp = prepare_experiment(cfg, out);
  auto csv = open_output(cfg.output_dir / ("sweep_" + cfg.sweep_axis + ".csv"));
  csv << cfg.sweep_axis << ",cer,rtf,S,D,I\n";
  out << "mode=" << to_string(cfg.modes.front()) << " axis=" << cfg.sweep_axis << '\n';
  for (double v : cfg.sweep_values) {
    DecodeConfig dc = resolved_decode_config(cfg);
    dc.mode = cfg.modes.front();
    if (cfg.sweep_axis == "n_max") {
      dc.n_max = static_cast<std::size_t>(v);
    } else if (cfg.sweep_axis == "lambda") {
      dc.knn.lambda = v;
    } else {
      dc.knn.tau = v;
    }
    const ModeRun run = run_mode(exp, dc);
    print_failures(out, run.outcome);
    const auto& a = run.report.aggregate_counts;
    const std::string row = format_value(cfg.sweep_axis, v) + ',' +
                            format_fixed(run.report.aggregate_cer, 4) + ',' +
                            format_fixed(cfg.timing ? run.report.rtf : 0.0, 6) + ',' +
                            std::to_string(a.substitutions) + ',' + std::to_string(a.deletions) +
                            ',' + std::to_string(a.insertions);
    csv << row << '\n';
    out << row << '\n';
  }
  out << "sweep -> " << (cfg.output_dir / ("sweep_" + cfg.sweep_axis + ".csv")).string() << '\n';
  return kExitOk;
}

int exit_code_for(const std::exception& e) noexcept {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    return err->code() == ErrorCode::kConfig ? kExitUsage : kExitRuntime;
  }
  return kExitRuntime;
}

void report_error(std::ostream& err, const std::exception& e) {
  if (const auto* m2r_err = dynamic_cast<const Error*>(&e)) {
    err << "error [" << to_string(m2r_err->code()) << "]: " << e.what() << '\n';
  } else {
    err << "error: " << e.what() << '\n';
  }
}

}  // namespace m2r
