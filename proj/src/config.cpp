#include "adaalter/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "adaalter/trace_io.hpp"

namespace adaalter {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ConfigError(key + ": cannot parse '" + text + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError(key + ": value must be finite");
  }
  return value;
}

template <typename T>
T parse_count(const std::string& key, const std::string& text) {
  if (!text.empty() && text.front() == '-') throw ConfigError(key + " must be >= 0");
  return parse_number<T>(key, text);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

template <typename F>
auto rethrow_as_config(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"algo", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.algo = rethrow_as_config(k, [&] { return parse_algorithm(v); });
       }},
      {"n", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.n = parse_count<std::size_t>(k, v);
       }},
      {"T", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.T = parse_number<std::int64_t>(k, v);
       }},
      {"H", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.H = parse_number<std::int64_t>(k, v);
       }},
      {"sync", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.sync = rethrow_as_config(k, [&] { return parse_sync_mode(v); });
       }},
      {"d", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.d = parse_count<std::size_t>(k, v);
       }},
      {"eta", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.eta = parse_number<double>(k, v);
       }},
      {"warm_up_steps", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.warm_up_steps = parse_number<std::int64_t>(k, v);
       }},
      {"lr_scale_mode", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.lr_scale_mode = rethrow_as_config(k, [&] { return parse_lr_scale_mode(v); });
       }},
      {"lr_scale_k", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.lr_scale_k = parse_number<double>(k, v);
       }},
      {"b0sq", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.b0sq = parse_number<double>(k, v);
       }},
      {"epssq", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.epssq = parse_number<double>(k, v);
       }},
      {"clip_rho", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "none") {
           c.clip_rho.reset();
         } else {
           c.clip_rho = parse_number<double>(k, v);
         }
       }},
      {"problem", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.problem = rethrow_as_config(k, [&] { return parse_problem_kind(v); });
       }},
      {"num_samples", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.num_samples = parse_count<std::size_t>(k, v);
       }},
      {"num_classes", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.num_classes = parse_number<int>(k, v);
       }},
      {"separation", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.separation = parse_number<double>(k, v);
       }},
      {"noise", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.noise = parse_number<double>(k, v);
       }},
      {"lambda_min", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.lambda_min = parse_number<double>(k, v);
       }},
      {"lambda_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.lambda_max = parse_number<double>(k, v);
       }},
      {"rotate", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.rotate = parse_bool(k, v);
       }},
      {"beta", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.beta = parse_number<double>(k, v);
       }},
      {"l2", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.l2 = parse_number<double>(k, v);
       }},
      {"batch", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.batch = parse_count<std::size_t>(k, v);
       }},
      {"alpha", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.alpha = parse_number<double>(k, v);
       }},
      {"identical_shards", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.identical_shards = parse_bool(k, v);
       }},
      {"x0", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.x0 = parse_number<double>(k, v);
       }},
      {"data_seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.data_seed = parse_count<std::uint64_t>(k, v);
       }},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_count<std::uint64_t>(k, v);
       }},
      {"threads", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.threads = parse_count<std::size_t>(k, v);
       }},
      {"check_bound", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.check_bound = parse_bool(k, v);
       }},
      {"dump_shards", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.dump_shards = parse_bool(k, v);
       }},
      {"verify_invariants", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.verify_invariants = parse_bool(k, v);
       }},
      {"output_dir", [](RunConfig& c, const std::string&, const std::string& v) {
         c.output_dir = v;
       }},
  };
  return table;
}

std::string emit_impl(const RunConfig& c, bool for_hash) {
  std::ostringstream out;
  auto put = [&](const char* key, const std::string& value) { out << key << '=' << value << '\n'; };
  put("algo", to_string(c.algo));
  put("n", std::to_string(c.n));
  put("T", std::to_string(c.T));
  put("H", std::to_string(c.H));
  put("sync", to_string(c.sync));
  put("d", std::to_string(c.d));
  put("eta", format_double(c.eta));
  put("warm_up_steps", std::to_string(c.warm_up_steps));
  put("lr_scale_mode", to_string(c.lr_scale_mode));
  put("lr_scale_k", format_double(c.lr_scale_k));
  if (c.b0sq) put("b0sq", format_double(*c.b0sq));
  put("epssq", format_double(c.epssq));
  put("clip_rho", c.clip_rho ? format_double(*c.clip_rho) : "none");
  put("problem", to_string(c.problem));
  put("num_samples", std::to_string(c.num_samples));
  put("num_classes", std::to_string(c.num_classes));
  put("separation", format_double(c.separation));
  put("noise", format_double(c.noise));
  put("lambda_min", format_double(c.lambda_min));
  put("lambda_max", format_double(c.lambda_max));
  put("rotate", c.rotate ? "true" : "false");
  put("beta", format_double(c.beta));
  put("l2", format_double(c.l2));
  put("batch", std::to_string(c.batch));
  put("alpha", format_double(c.alpha));
  put("identical_shards", c.identical_shards ? "true" : "false");
  put("x0", format_double(c.x0));
  put("data_seed", std::to_string(c.data_seed));
  put("check_bound", c.check_bound ? "true" : "false");
  if (!for_hash) {
    put("verify_invariants", c.verify_invariants ? "true" : "false");
    put("dump_shards", c.dump_shards ? "true" : "false");
    put("seed", std::to_string(c.seed));
    put("threads", std::to_string(c.threads));
    put("output_dir", c.output_dir);
  }
  return out.str();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      it->second(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }

  for (const char* required : {"algo", "n", "T", "d", "eta"}) {
    if (!seen.count(required)) throw ConfigError(std::string("missing required key '") + required + "'");
  }
  const bool local = cfg.algo == Algorithm::LocalSgd || cfg.algo == Algorithm::LocalAdaAlter;
  if (local && cfg.sync == SyncMode::Periodic && !seen.count("H")) {
    throw ConfigError("missing required key 'H'");
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string emit_config(const RunConfig& cfg) { return emit_impl(cfg, false); }

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : emit_impl(cfg, true)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string run_name(const RunConfig& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return std::string(buf) + "_s" + std::to_string(cfg.seed);
}

}  // namespace adaalter
