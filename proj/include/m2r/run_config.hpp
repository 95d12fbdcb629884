#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "m2r/pipeline.hpp"
#include "m2r/synthetic.hpp"

namespace m2r {

/// Everything a CLI run needs, read from an INI-style file:
///
///   # comment
///   [corpus]      seed, n_train, n_test, n_topics, min_len, max_len,
///                 acoustic_sigma, exports
///   [model]       vocab_size, embed_dim, confusion_mass, del_rate, ins_rate,
///                 noise_sigma, prefix_bias_beta
///   [decode]      mode (baseline | knn_only | icl_only | m2r | all), lambda,
///                 tau, k, k_sentence, n_max, budget_s, max_decode_len,
///                 exclude_self, on_error (abort | skip)
///   [stores]      sentence, token
///   [normalize]   tables (comma separated, applied in order)
///   [output]      dir, timing
///   [sweep]       axis (n_max | lambda | tau), values (comma separated)
///
/// Unknown sections or keys are errors.
struct RunConfig {
  SyntheticSpec synthetic;
  std::optional<std::filesystem::path> exports;  // train exports for `build`

  std::vector<DecodeMode> modes{DecodeMode::kM2r};
  DecodeConfig decode;
  bool max_decode_len_set = false;

  std::optional<std::filesystem::path> sentence_store;
  std::optional<std::filesystem::path> token_store;
  std::vector<std::filesystem::path> normalize_tables;

  std::filesystem::path output_dir = "m2r_out";
  bool timing = true;

  std::string sweep_axis = "n_max";
  std::vector<double> sweep_values;

  // Checks ranges and that every referenced input path exists. Throws
  // kConfig.
  void validate() const;
};

// Relative paths in the file are resolved against `base_dir`.
RunConfig parse_run_config(std::istream& in, std::string_view origin = "<config>",
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

std::vector<DecodeMode> parse_modes(std::string_view value);
std::vector<double> parse_number_list(std::string_view value);

// Default cap on free tokens: twice the longest synthetic utterance.
std::size_t effective_max_decode_len(const RunConfig& cfg);

}  // namespace m2r
