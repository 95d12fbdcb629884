#include "m2r/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "m2r/errors.hpp"

namespace m2r {

AudioSegment concat_audio(std::span<const AudioSegment* const> parts,
                          std::string utterance_id) {
  AudioSegment out;
  out.utterance_id = std::move(utterance_id);
  bool first = true;
  for (const AudioSegment* part : parts) {
    if (first) {
      out.frame_duration_s = part->frame_duration_s;
      out.frames = Matrix(0, part->frames.cols());
      first = false;
    } else if (part->frame_duration_s != out.frame_duration_s) {
      throw Error(ErrorCode::kInvalidArgument,
                  "cannot concatenate audio with different frame durations (" +
                      part->utterance_id + ")");
    }
    out.frames.append_rows(part->frames);
  }
  return out;
}

TokenSeq target_sequence(std::span<const TokenId> tokens, TokenId eos) {
  TokenSeq out(tokens.begin(), tokens.end());
  out.push_back(eos);
  return out;
}

std::vector<double> softmax(std::span<const float> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(static_cast<double>(logits[i]) - top);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

}  // namespace m2r
