#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "m2r/model.hpp"
#include "m2r/synthetic.hpp"

namespace m2r {

// Per-utterance tensors produced offline by a real ASR model.
//
// Stream layout, little-endian:
//
//   magic "M2RX" | u32 version
//   record*:  u32 header_len | header (one line of JSON, '\n' terminated)
//             u64 payload_len | f32 frames[n_frames * frame_dim]
//                             | f32 taps[steps * tap_dim]
//                             | f32 logits[steps * vocab_size]   (if has_logits)
//
// Header keys: utterance_id, text, transcript (token ids ending in eos_id),
// n_frames, frame_dim, steps, tap_dim, vocab_size, has_logits,
// frame_duration_s, start_id, eos_id. Taps and logits are teacher-forced over
// the transcript, one row per transcript position.
inline constexpr char kExportMagic[4] = {'M', '2', 'R', 'X'};
inline constexpr std::uint32_t kExportVersion = 1;

struct UtteranceExport {
  std::string utterance_id;
  std::string text;
  TokenSeq transcript;  // content tokens followed by eos_id
  Matrix frames;        // encoder frame embeddings
  Matrix taps;
  Matrix logits;  // empty when the exporter did not keep logits
  std::size_t vocab_size = 0;
  double frame_duration_s = 0.02;
  TokenId start_id = 0;
  TokenId eos_id = 1;

  bool has_logits() const noexcept { return !logits.empty(); }
};

// Encodes and teacher-forces `utt` with `model`.
UtteranceExport export_utterance(const AsrModel& model, const Utterance& utt,
                                 bool keep_logits = true);

class ExportWriter {
 public:
  explicit ExportWriter(std::ostream& out);
  void write(const UtteranceExport& record);

 private:
  std::ostream& out_;
};

void write_exports(std::ostream& out, const std::vector<UtteranceExport>& records);
void write_exports(const std::filesystem::path& path,
                   const std::vector<UtteranceExport>& records);

// Parses and validates a whole stream. A zero-length stream holds no records.
std::vector<UtteranceExport> read_exports(std::string_view bytes);
std::vector<UtteranceExport> load_exports(const std::filesystem::path& path);

/// Model stand-in that replays exported tensors by utterance id. encode and
/// teacher_force return the stored frames and taps; free decoding is not
/// available and decode_step throws kModelFailure.
class ReplayModel final : public AsrModel {
 public:
  explicit ReplayModel(std::vector<UtteranceExport> records);

  ModelInfo info() const override { return info_; }
  EncodeResult encode(const AudioSegment& audio) const override;
  StepOutput decode_step(const EncodeResult& encoded, std::span<const TokenId> context,
                         std::size_t forced_prefix_len) const override;
  std::vector<StepOutput> teacher_force(const EncodeResult& encoded,
                                        std::span<const TokenId> target) const override;

  const std::vector<UtteranceExport>& records() const noexcept { return records_; }

 private:
  const UtteranceExport& find(const std::string& id) const;

  std::vector<UtteranceExport> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
  ModelInfo info_;
};

struct ImportedExports {
  Corpus corpus;  // audio frames are the stored encoder frames
  std::shared_ptr<const ReplayModel> model;
};

ImportedExports import_exports(std::vector<UtteranceExport> records);
ImportedExports import_exports(const std::filesystem::path& path);

}  // namespace m2r
