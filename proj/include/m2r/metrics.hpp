#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "m2r/normalize.hpp"
#include "m2r/pipeline.hpp"

namespace m2r {

struct ErrorCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_len = 0;

  std::size_t errors() const noexcept { return substitutions + deletions + insertions; }

  ErrorCounts& operator+=(const ErrorCounts& o) noexcept {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    ref_len += o.ref_len;
    return *this;
  }
  friend bool operator==(const ErrorCounts&, const ErrorCounts&) = default;
};

/// S/D/I counts of a unit-cost minimum edit alignment of `hyp` against
/// `ref`. The alignment is recovered by backtracing from the bottom-right
/// cell; among optimal predecessors the diagonal (match or substitution) is
/// taken first, then up (deletion), then left (insertion).
ErrorCounts levenshtein_align(std::span<const Symbol> ref, std::span<const Symbol> hyp);

// 100 * (S + D + I) / ref_len.
double cer(const ErrorCounts& counts);

// 100 * (base - new) / base.
double relative_reduction(double base_cer, double new_cer);

struct UtteranceScore {
  std::string utterance_id;
  ErrorCounts counts;
  double wall_time_s = 0.0;
  double audio_duration_s = 0.0;
};

struct EvalReport {
  std::vector<UtteranceScore> per_utterance;
  ErrorCounts aggregate_counts;
  double aggregate_cer = 0.0;
  double rtf = 0.0;
};

using References = std::unordered_map<std::string, SymbolSeq>;

/// Scores every result against its reference after normalizing both sides.
/// Aggregate CER is corpus-level (total errors over total reference length);
/// RTF is total wall time over total test audio duration.
EvalReport build_report(std::span<const DecodeResult> results,
                        const References& refs, const Normalizer& normalizer);

// Token ids widened to symbols.
SymbolSeq to_symbols(std::span<const TokenId> tokens);

struct ReportOptions {
  bool timing = true;  // false writes zero wall times and RTF
};

// One CSV row per utterance: id,ref_len,S,D,I,cer,wall_time_s,audio_s; then
// a TOTAL row with the aggregate counts.
void write_report_csv(std::ostream& os, const EvalReport& report,
                      const ReportOptions& opts = {});

// key=value lines.
void write_summary(std::ostream& os, const EvalReport& report, std::string_view label,
                   const ReportOptions& opts = {});

std::string format_fixed(double value, int precision);

}  // namespace m2r
