#include "m2r/exports.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "m2r/byte_io.hpp"
#include "m2r/errors.hpp"
#include "m2r/storage.hpp"

namespace m2r {

namespace {

using nlohmann::json;

std::string describe(const UtteranceExport& r, std::size_t index) {
  return "record " + std::to_string(index) + " ('" + r.utterance_id + "')";
}

Matrix read_matrix(ByteReader& r, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  r.f32_array(m.data());
  for (float v : m.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kFormat, "non-finite value in payload");
  }
  return m;
}

template <typename T>
T field(const json& h, const char* key) {
  const auto it = h.find(key);
  if (it == h.end()) throw Error(ErrorCode::kFormat, std::string("header lacks '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kFormat, std::string("header field '") + key + "' has the wrong type");
  }
}

UtteranceExport read_record(ByteReader& r, std::size_t index) {
  const std::string where = "record " + std::to_string(index);
  const std::uint32_t header_len = r.u32();
  const std::string_view header_text = r.bytes(header_len);
  json h;
  try {
    h = json::parse(header_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kFormat, where + ": malformed header: " + e.what());
  }
  if (!h.is_object()) throw Error(ErrorCode::kFormat, where + ": header is not an object");

  UtteranceExport rec;
  std::size_t n_frames = 0, frame_dim = 0, steps = 0, tap_dim = 0;
  bool has_logits = false;
  try {
    rec.utterance_id = field<std::string>(h, "utterance_id");
    rec.text = field<std::string>(h, "text");
    rec.transcript = field<TokenSeq>(h, "transcript");
    n_frames = field<std::size_t>(h, "n_frames");
    frame_dim = field<std::size_t>(h, "frame_dim");
    steps = field<std::size_t>(h, "steps");
    tap_dim = field<std::size_t>(h, "tap_dim");
    rec.vocab_size = field<std::size_t>(h, "vocab_size");
    has_logits = field<bool>(h, "has_logits");
    rec.frame_duration_s = field<double>(h, "frame_duration_s");
    rec.start_id = field<TokenId>(h, "start_id");
    rec.eos_id = field<TokenId>(h, "eos_id");
  } catch (const Error& e) {
    throw Error(e.code(), where + ": " + e.what());
  }
  const std::string who = describe(rec, index);
  if (steps != rec.transcript.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                who + ": steps " + std::to_string(steps) + " differ from transcript length " +
                    std::to_string(rec.transcript.size()));
  }
  if (rec.transcript.empty() || rec.transcript.back() != rec.eos_id) {
    throw Error(ErrorCode::kFormat, who + ": transcript must end with eos_id");
  }
  for (TokenId t : rec.transcript) {
    if (t >= rec.vocab_size) throw Error(ErrorCode::kFormat, who + ": token outside vocabulary");
  }
  if (frame_dim == 0 || tap_dim == 0 || !(rec.frame_duration_s > 0.0)) {
    throw Error(ErrorCode::kFormat, who + ": dimensions and frame duration must be positive");
  }

  const std::uint64_t payload_len = r.u64();
  const std::uint64_t expected =
      4ull * (static_cast<std::uint64_t>(n_frames) * frame_dim +
              static_cast<std::uint64_t>(steps) * tap_dim +
              (has_logits ? static_cast<std::uint64_t>(steps) * rec.vocab_size : 0));
  if (payload_len != expected) {
    throw Error(ErrorCode::kSizeMismatch, who + ": payload of " + std::to_string(payload_len) +
                                              " bytes, header implies " +
                                              std::to_string(expected));
  }
  if (payload_len > r.remaining()) {
    throw Error(ErrorCode::kSizeMismatch, who + ": payload truncated");
  }
  try {
    rec.frames = read_matrix(r, n_frames, frame_dim);
    rec.taps = read_matrix(r, steps, tap_dim);
    if (has_logits) rec.logits = read_matrix(r, steps, rec.vocab_size);
  } catch (const Error& e) {
    throw Error(e.code(), who + ": " + e.what());
  }
  return rec;
}

void check_consistent(const UtteranceExport& first, const UtteranceExport& rec,
                      std::size_t index) {
  const auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kDimensionMismatch,
                describe(rec, index) + " has " + what + " inconsistent with " +
                    describe(first, 0));
  };
  if (rec.frames.cols() != first.frames.cols()) fail("frame_dim");
  if (rec.taps.cols() != first.taps.cols()) fail("tap_dim");
  if (rec.vocab_size != first.vocab_size) fail("vocab_size");
  if (rec.start_id != first.start_id || rec.eos_id != first.eos_id) fail("special token ids");
  if (rec.frame_duration_s != first.frame_duration_s) fail("frame_duration_s");
}

}  // namespace

UtteranceExport export_utterance(const AsrModel& model, const Utterance& utt,
                                 bool keep_logits) {
  const ModelInfo info = model.info();
  const EncodeResult enc = model.encode(utt.audio);
  UtteranceExport rec;
  rec.utterance_id = utt.id;
  rec.text = utt.text;
  rec.transcript = target_sequence(utt.tokens, info.eos_token);
  rec.frames = Matrix(enc.valid_frame_count, enc.frame_embeddings.cols());
  for (std::size_t i = 0; i < enc.valid_frame_count; ++i) {
    std::copy_n(enc.frame_embeddings.row(i).begin(), rec.frames.cols(),
                rec.frames.row(i).begin());
  }
  for (const StepOutput& s : model.teacher_force(enc, rec.transcript)) {
    rec.taps.append_row(s.knn_query);
    if (keep_logits) rec.logits.append_row(s.logits);
  }
  rec.vocab_size = info.vocab_size;
  rec.frame_duration_s = utt.audio.frame_duration_s;
  rec.start_id = info.start_token;
  rec.eos_id = info.eos_token;
  return rec;
}

ExportWriter::ExportWriter(std::ostream& out) : out_(out) {
  ByteWriter w;
  w.bytes(std::string_view(kExportMagic, 4));
  w.u32(kExportVersion);
  const std::string head = std::move(w).take();
  out_.write(head.data(), static_cast<std::streamsize>(head.size()));
}

void ExportWriter::write(const UtteranceExport& rec) {
  const json h = {
      {"utterance_id", rec.utterance_id},
      {"text", rec.text},
      {"transcript", rec.transcript},
      {"n_frames", rec.frames.rows()},
      {"frame_dim", rec.frames.cols()},
      {"steps", rec.transcript.size()},
      {"tap_dim", rec.taps.cols()},
      {"vocab_size", rec.vocab_size},
      {"has_logits", rec.has_logits()},
      {"frame_duration_s", rec.frame_duration_s},
      {"start_id", rec.start_id},
      {"eos_id", rec.eos_id},
  };
  const std::string header = h.dump() + "\n";
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.bytes(header);
  w.u64(4ull * (rec.frames.data().size() + rec.taps.data().size() + rec.logits.data().size()));
  w.f32_array(rec.frames.data());
  w.f32_array(rec.taps.data());
  w.f32_array(rec.logits.data());
  const std::string bytes = std::move(w).take();
  out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw Error(ErrorCode::kIo, "failed writing export record '" + rec.utterance_id + "'");
}

void write_exports(std::ostream& out, const std::vector<UtteranceExport>& records) {
  ExportWriter writer(out);
  for (const auto& r : records) writer.write(r);
}

void write_exports(const std::filesystem::path& path,
                   const std::vector<UtteranceExport>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_exports(out, records);
}

std::vector<UtteranceExport> read_exports(std::string_view bytes) {
  std::vector<UtteranceExport> records;
  if (bytes.empty()) return records;
  ByteReader r(bytes);
  if (r.remaining() < 8 || r.bytes(4) != std::string_view(kExportMagic, 4)) {
    throw Error(ErrorCode::kBadMagic, "not an utterance export stream (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kExportVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported export version " + std::to_string(version));
  }
  std::unordered_map<std::string, std::size_t> seen;
  while (r.remaining() > 0) {
    UtteranceExport rec = read_record(r, records.size());
    if (!records.empty()) check_consistent(records.front(), rec, records.size());
    if (!seen.emplace(rec.utterance_id, records.size()).second) {
      throw Error(ErrorCode::kFormat, describe(rec, records.size()) + " duplicates " +
                                          describe(records[seen[rec.utterance_id]],
                                                   seen[rec.utterance_id]));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<UtteranceExport> load_exports(const std::filesystem::path& path) {
  return read_exports(read_file_bytes(path));
}

ReplayModel::ReplayModel(std::vector<UtteranceExport> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (i > 0) check_consistent(records_.front(), records_[i], i);
    if (!by_id_.emplace(records_[i].utterance_id, i).second) {
      throw Error(ErrorCode::kFormat, "duplicate utterance id '" + records_[i].utterance_id + "'");
    }
  }
  if (!records_.empty()) {
    const auto& f = records_.front();
    info_.vocab_size = f.vocab_size;
    info_.encoder_dim = f.frames.cols();
    info_.tap_dim = f.taps.cols();
    info_.start_token = f.start_id;
    info_.eos_token = f.eos_id;
  }
}

const UtteranceExport& ReplayModel::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw Error(ErrorCode::kModelFailure, "no exported tensors for utterance '" + id + "'");
  }
  return records_[it->second];
}

EncodeResult ReplayModel::encode(const AudioSegment& audio) const {
  const UtteranceExport& rec = find(audio.utterance_id);
  return {rec.utterance_id, rec.frames, rec.frames.rows()};
}

StepOutput ReplayModel::decode_step(const EncodeResult& encoded, std::span<const TokenId>,
                                    std::size_t) const {
  throw Error(ErrorCode::kModelFailure,
              "replayed exports cannot decode freely ('" + encoded.utterance_id + "')");
}

std::vector<StepOutput> ReplayModel::teacher_force(const EncodeResult& encoded,
                                                   std::span<const TokenId> target) const {
  const UtteranceExport& rec = find(encoded.utterance_id);
  if (!std::equal(target.begin(), target.end(), rec.transcript.begin(), rec.transcript.end())) {
    throw Error(ErrorCode::kLengthMismatch,
                "target differs from the exported transcript of '" + rec.utterance_id + "'");
  }
  std::vector<StepOutput> out(target.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto tap = rec.taps.row(i);
    out[i].knn_query.assign(tap.begin(), tap.end());
    if (rec.has_logits()) {
      const auto lg = rec.logits.row(i);
      out[i].logits.assign(lg.begin(), lg.end());
    }
  }
  return out;
}

ImportedExports import_exports(std::vector<UtteranceExport> records) {
  ImportedExports out;
  for (const auto& rec : records) {
    Utterance u;
    u.id = rec.utterance_id;
    u.text = rec.text;
    u.tokens.assign(rec.transcript.begin(), rec.transcript.end() - 1);
    u.audio = AudioSegment{rec.utterance_id, rec.frames, rec.frame_duration_s};
    out.corpus.push_back(std::move(u));
  }
  out.model = std::make_shared<const ReplayModel>(std::move(records));
  return out;
}

ImportedExports import_exports(const std::filesystem::path& path) {
  return import_exports(load_exports(path));
}

}  // namespace m2r
