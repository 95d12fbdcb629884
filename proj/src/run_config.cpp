#include "m2r/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <string>

#include "m2r/errors.hpp"

namespace m2r {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view value) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = value.find(',');
    const auto item = trim(value.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

double to_double(std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw Error(ErrorCode::kConfig, "'" + std::string(v) + "' is not a number");
  }
  return out;
}

std::uint64_t to_uint(std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw Error(ErrorCode::kConfig, "'" + std::string(v) + "' is not a non-negative integer");
  }
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::kConfig, "'" + std::string(v) + "' is not a boolean");
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

std::map<std::string, Setter, std::less<>> make_setters(const std::filesystem::path& base) {
  std::map<std::string, Setter, std::less<>> table;
  const auto resolve = [base](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_absolute() || base.empty() ? p : base / p;
  };
  auto& t = table;
  t["corpus.seed"] = [](RunConfig& c, std::string_view v) { c.synthetic.seed = to_uint(v); };
  t["corpus.n_train"] = [](RunConfig& c, std::string_view v) { c.synthetic.n_train = to_uint(v); };
  t["corpus.n_test"] = [](RunConfig& c, std::string_view v) { c.synthetic.n_test = to_uint(v); };
  t["corpus.n_topics"] = [](RunConfig& c, std::string_view v) {
    c.synthetic.n_topics = to_uint(v);
  };
  t["corpus.min_len"] = [](RunConfig& c, std::string_view v) { c.synthetic.min_len = to_uint(v); };
  t["corpus.max_len"] = [](RunConfig& c, std::string_view v) { c.synthetic.max_len = to_uint(v); };
  t["corpus.acoustic_sigma"] = [](RunConfig& c, std::string_view v) {
    c.synthetic.acoustic_sigma = to_double(v);
  };
  t["corpus.exports"] = [resolve](RunConfig& c, std::string_view v) { c.exports = resolve(v); };

  t["model.vocab_size"] = [](RunConfig& c, std::string_view v) {
    c.synthetic.vocab_size = to_uint(v);
  };
  t["model.embed_dim"] = [](RunConfig& c, std::string_view v) {
    c.synthetic.embed_dim = to_uint(v);
  };
  t["model.confusion_mass"] = [](RunConfig& c, std::string_view v) {
    c.synthetic.confusion_mass = to_double(v);
  };
  t["model.del_rate"] = [](RunConfig& c, std::string_view v) {
    c.synthetic.del_rate = to_double(v);
  };
  t["model.ins_rate"] = [](RunConfig& c, std::string_view v) {
    c.synthetic.ins_rate = to_double(v);
  };
  t["model.noise_sigma"] = [](RunConfig& c, std::string_view v) {
    c.synthetic.noise_sigma = to_double(v);
  };
  t["model.prefix_bias_beta"] = [](RunConfig& c, std::string_view v) {
    c.synthetic.prefix_bias_beta = to_double(v);
  };

  t["decode.mode"] = [](RunConfig& c, std::string_view v) {
    c.modes = parse_modes(v);
    c.decode.mode = c.modes.back();
  };
  t["decode.lambda"] = [](RunConfig& c, std::string_view v) { c.decode.knn.lambda = to_double(v); };
  t["decode.tau"] = [](RunConfig& c, std::string_view v) { c.decode.knn.tau = to_double(v); };
  t["decode.k"] = [](RunConfig& c, std::string_view v) { c.decode.knn.k = to_uint(v); };
  t["decode.k_sentence"] = [](RunConfig& c, std::string_view v) {
    c.decode.k_sentence = to_uint(v);
  };
  t["decode.n_max"] = [](RunConfig& c, std::string_view v) { c.decode.n_max = to_uint(v); };
  t["decode.budget_s"] = [](RunConfig& c, std::string_view v) {
    c.decode.audio_budget_s = to_double(v);
  };
  t["decode.max_decode_len"] = [](RunConfig& c, std::string_view v) {
    c.decode.max_decode_len = to_uint(v);
    c.max_decode_len_set = true;
  };
  t["decode.exclude_self"] = [](RunConfig& c, std::string_view v) {
    c.decode.exclude_self = to_bool(v);
  };
  t["decode.on_error"] = [](RunConfig& c, std::string_view v) {
    if (v == "abort") {
      c.decode.on_error = OnError::kAbort;
    } else if (v == "skip") {
      c.decode.on_error = OnError::kSkip;
    } else {
      throw Error(ErrorCode::kConfig, "on_error must be 'abort' or 'skip'");
    }
  };

  t["stores.sentence"] = [resolve](RunConfig& c, std::string_view v) {
    c.sentence_store = resolve(v);
  };
  t["stores.token"] = [resolve](RunConfig& c, std::string_view v) { c.token_store = resolve(v); };
  t["normalize.tables"] = [resolve](RunConfig& c, std::string_view v) {
    c.normalize_tables.clear();
    for (auto item : split_commas(v)) c.normalize_tables.push_back(resolve(item));
  };
  t["output.dir"] = [resolve](RunConfig& c, std::string_view v) { c.output_dir = resolve(v); };
  t["output.timing"] = [](RunConfig& c, std::string_view v) { c.timing = to_bool(v); };
  t["sweep.axis"] = [](RunConfig& c, std::string_view v) { c.sweep_axis = std::string(v); };
  t["sweep.values"] = [](RunConfig& c, std::string_view v) {
    c.sweep_values = parse_number_list(v);
  };
  return table;
}

void require_path(const std::optional<std::filesystem::path>& p, const char* what) {
  if (p && !std::filesystem::exists(*p)) {
    throw Error(ErrorCode::kConfig, std::string(what) + " not found: " + p->string());
  }
}

}  // namespace

std::vector<DecodeMode> parse_modes(std::string_view value) {
  if (value == "all") {
    return {DecodeMode::kBaseline, DecodeMode::kKnnOnly, DecodeMode::kIclOnly, DecodeMode::kM2r};
  }
  std::vector<DecodeMode> out;
  for (auto item : split_commas(value)) {
    try {
      out.push_back(parse_mode(item));
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, e.what());
    }
  }
  if (out.empty()) throw Error(ErrorCode::kConfig, "no decode mode given");
  return out;
}

std::vector<double> parse_number_list(std::string_view value) {
  std::vector<double> out;
  for (auto item : split_commas(value)) out.push_back(to_double(item));
  return out;
}

std::size_t effective_max_decode_len(const RunConfig& cfg) {
  return cfg.max_decode_len_set ? cfg.decode.max_decode_len : 2 * cfg.synthetic.max_len;
}

RunConfig parse_run_config(std::istream& in, std::string_view origin,
                           const std::filesystem::path& base_dir) {
  RunConfig cfg;
  const auto table = make_setters(base_dir);
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto where = [&] { return std::string(origin) + ":" + std::to_string(lineno) + ": "; };
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw Error(ErrorCode::kConfig, where() + "unterminated section");
      section = std::string(trim(text.substr(1, text.size() - 2)));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfig, where() + "expected key = value");
    }
    const std::string key = section + "." + std::string(trim(text.substr(0, eq)));
    const auto value = trim(text.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) throw Error(ErrorCode::kConfig, where() + "unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, where() + key + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "config file not found: " + path.string());
  return parse_run_config(in, path.string(), path.parent_path());
}

void RunConfig::validate() const {
  const auto bad = [](const std::string& msg) { throw Error(ErrorCode::kConfig, msg); };
  if (synthetic.n_test == 0) bad("n_test must be positive");
  if (synthetic.min_len == 0 || synthetic.min_len > synthetic.max_len) {
    bad("need 0 < min_len <= max_len");
  }
  try {
    DecodeConfig d = decode;
    d.max_decode_len = effective_max_decode_len(*this);
    d.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
  if (modes.empty()) bad("no decode mode given");
  require_path(exports, "exports file");
  require_path(sentence_store, "sentence store");
  require_path(token_store, "token store");
  for (const auto& t : normalize_tables) require_path(t, "normalization table");
}

}  // namespace m2r
