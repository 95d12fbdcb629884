#include "m2r/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>

#include "m2r/errors.hpp"

namespace m2r {

ErrorCounts levenshtein_align(std::span<const Symbol> ref, std::span<const Symbol> hyp) {
  if (ref.empty()) {
    throw Error(ErrorCode::kEmptyInput, "empty reference: error rate undefined");
  }
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t w = m + 1;
  std::vector<std::uint32_t> cost((n + 1) * w);
  for (std::size_t j = 0; j <= m; ++j) cost[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cost[i * w] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag = cost[(i - 1) * w + j - 1] + (ref[i - 1] != hyp[j - 1]);
      const std::uint32_t up = cost[(i - 1) * w + j] + 1;
      const std::uint32_t left = cost[i * w + j - 1] + 1;
      cost[i * w + j] = std::min({diag, up, left});
    }
  }

  ErrorCounts c;
  c.ref_len = n;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = cost[i * w + j];
    if (i > 0 && j > 0) {
      const bool mismatch = ref[i - 1] != hyp[j - 1];
      if (cost[(i - 1) * w + j - 1] + mismatch == here) {
        c.substitutions += mismatch;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && cost[(i - 1) * w + j] + 1 == here) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

double cer(const ErrorCounts& counts) {
  if (counts.ref_len == 0) {
    throw Error(ErrorCode::kInvalidArgument, "CER needs a positive reference length");
  }
  return 100.0 * static_cast<double>(counts.errors()) / static_cast<double>(counts.ref_len);
}

double relative_reduction(double base_cer, double new_cer) {
  if (!(base_cer > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "relative reduction needs a positive base CER");
  }
  return 100.0 * (base_cer - new_cer) / base_cer;
}

SymbolSeq to_symbols(std::span<const TokenId> tokens) {
  return SymbolSeq(tokens.begin(), tokens.end());
}

EvalReport build_report(std::span<const DecodeResult> results, const References& refs,
                        const Normalizer& normalizer) {
  EvalReport report;
  double wall = 0.0;
  double audio = 0.0;
  for (const auto& r : results) {
    const auto it = refs.find(r.utterance_id);
    if (it == refs.end()) {
      throw Error(ErrorCode::kMissingReference,
                  "no reference for utterance '" + r.utterance_id + "'");
    }
    const SymbolSeq ref = normalizer.apply(it->second);
    const SymbolSeq hyp = normalizer.apply(to_symbols(r.hypothesis));
    UtteranceScore s{r.utterance_id, levenshtein_align(ref, hyp), r.wall_time_s,
                     r.audio_duration_s};
    report.aggregate_counts += s.counts;
    wall += s.wall_time_s;
    audio += s.audio_duration_s;
    report.per_utterance.push_back(std::move(s));
  }
  if (report.aggregate_counts.ref_len > 0) report.aggregate_cer = cer(report.aggregate_counts);
  report.rtf = audio > 0.0 ? wall / audio : 0.0;
  return report;
}

std::string format_fixed(double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, value);
  return buf;
}

void write_report_csv(std::ostream& os, const EvalReport& report, const ReportOptions& opts) {
  os << "utterance_id,ref_len,S,D,I,cer,wall_time_s,audio_s\n";
  double wall = 0.0;
  double audio = 0.0;
  for (const auto& u : report.per_utterance) {
    const double t = opts.timing ? u.wall_time_s : 0.0;
    wall += t;
    audio += u.audio_duration_s;
    os << u.utterance_id << ',' << u.counts.ref_len << ',' << u.counts.substitutions << ','
       << u.counts.deletions << ',' << u.counts.insertions << ','
       << format_fixed(cer(u.counts), 4) << ',' << format_fixed(t, 6) << ','
       << format_fixed(u.audio_duration_s, 4) << '\n';
  }
  const auto& a = report.aggregate_counts;
  os << "TOTAL," << a.ref_len << ',' << a.substitutions << ',' << a.deletions << ','
     << a.insertions << ',' << format_fixed(report.aggregate_cer, 4) << ','
     << format_fixed(wall, 6) << ',' << format_fixed(audio, 4) << '\n';
}

void write_summary(std::ostream& os, const EvalReport& report, std::string_view label,
                   const ReportOptions& opts) {
  const auto& a = report.aggregate_counts;
  os << "label=" << label << '\n'
     << "utterances=" << report.per_utterance.size() << '\n'
     << "ref_len=" << a.ref_len << '\n'
     << "substitutions=" << a.substitutions << '\n'
     << "deletions=" << a.deletions << '\n'
     << "insertions=" << a.insertions << '\n'
     << "cer=" << format_fixed(report.aggregate_cer, 4) << '\n'
     << "rtf=" << format_fixed(opts.timing ? report.rtf : 0.0, 6) << '\n';
}

}  // namespace m2r
