#include "oamlink/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include <fmt/format.h>

#include "oamlink/error.hpp"
#include "oamlink/io.hpp"
#include "oamlink/source.hpp"

namespace oamlink {

namespace {

constexpr double kReferencePeakCounts = 31475.0;
constexpr double kReferenceIntegrationTime = 10.0;

[[noreturn]] void config_error(std::string msg) { throw Error(ErrorKind::Config, std::move(msg)); }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Drops a trailing comment, ignoring '#' inside a quoted string.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

struct Value {
  std::string text;
  bool quoted = false;
  int line = 0;
};

double as_double(const std::string& key, const Value& v) {
  if (v.quoted) config_error(fmt::format("line {}: {} expects a number", v.line, key));
  double out = 0.0;
  const char* end = v.text.data() + v.text.size();
  auto [ptr, ec] = std::from_chars(v.text.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    config_error(fmt::format("line {}: {} = '{}' is not a finite number", v.line, key, v.text));
  }
  return out;
}

int as_int(const std::string& key, const Value& v) {
  if (v.quoted) config_error(fmt::format("line {}: {} expects an integer", v.line, key));
  int out = 0;
  const char* end = v.text.data() + v.text.size();
  auto [ptr, ec] = std::from_chars(v.text.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    config_error(fmt::format("line {}: {} = '{}' is not an integer", v.line, key, v.text));
  }
  return out;
}

std::string as_string(const std::string& key, const Value& v) {
  if (!v.quoted) config_error(fmt::format("line {}: {} expects a quoted string", v.line, key));
  return v.text;
}

Value parse_value(std::string_view raw, int line) {
  Value v;
  v.line = line;
  if (raw.empty()) config_error(fmt::format("line {}: missing value", line));
  if (raw.front() != '"') {
    v.text = std::string(raw);
    return v;
  }
  v.quoted = true;
  std::size_t i = 1;
  for (; i < raw.size() && raw[i] != '"'; ++i) {
    if (raw[i] == '\\') {
      if (++i == raw.size()) break;
      switch (raw[i]) {
        case '"': v.text += '"'; break;
        case '\\': v.text += '\\'; break;
        default: config_error(fmt::format("line {}: unsupported escape \\{}", line, raw[i]));
      }
    } else {
      v.text += raw[i];
    }
  }
  if (i >= raw.size() || i + 1 != raw.size()) config_error(fmt::format("line {}: malformed string", line));
  return v;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string number(double x) { return fmt::format("{:.17g}", x); }

using Setter = std::function<void(ExperimentConfig&, const std::string&, const Value&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"source",
       {
           {"classical_oam_1550",
            [](ExperimentConfig& c, const std::string& k, const Value& v) {
              c.classical_oam_1550 = OamIndex{as_int(k, v)};
            }},
           {"pump_oam_795",
            [](ExperimentConfig& c, const std::string& k, const Value& v) {
              c.pump_oam_795 = OamIndex{as_int(k, v)};
            }},
           {"sigma", [](ExperimentConfig& c, const std::string& k, const Value& v) { c.sigma = as_double(k, v); }},
           {"truncation",
            [](ExperimentConfig& c, const std::string& k, const Value& v) { c.truncation = as_int(k, v); }},
       }},
      {"noise",
       {
           {"crosstalk_eps",
            [](ExperimentConfig& c, const std::string& k, const Value& v) {
              c.noise.crosstalk_eps = as_double(k, v);
            }},
           {"accidental_rate",
            [](ExperimentConfig& c, const std::string& k, const Value& v) {
              c.noise.accidental_rate = as_double(k, v);
            }},
           {"eta_eigen",
            [](ExperimentConfig& c, const std::string& k, const Value& v) { c.noise.eta_eigen = as_double(k, v); }},
           {"eta_super",
            [](ExperimentConfig& c, const std::string& k, const Value& v) { c.noise.eta_super = as_double(k, v); }},
           {"rate_constant",
            [](ExperimentConfig& c, const std::string& k, const Value& v) {
              c.noise.rate_constant = as_double(k, v);
            }},
           {"white_noise",
            [](ExperimentConfig& c, const std::string& k, const Value& v) { c.white_noise = as_double(k, v); }},
       }},
      {"measurement",
       {
           {"subspace_l",
            [](ExperimentConfig& c, const std::string& k, const Value& v) { c.subspace_l = as_int(k, v); }},
           {"integration_time",
            [](ExperimentConfig& c, const std::string& k, const Value& v) {
              c.integration_time = as_double(k, v);
            }},
       }},
      {"run",
       {
           {"seed",
            [](ExperimentConfig& c, const std::string& k, const Value& v) {
              if (v.quoted) config_error(fmt::format("line {}: {} expects an integer", v.line, k));
              c.seed = parse_seed(v.text);
            }},
           {"output_dir",
            [](ExperimentConfig& c, const std::string& k, const Value& v) { c.output_dir = as_string(k, v); }},
       }},
  };
  return table;
}

}  // namespace

OamIndex ExperimentConfig::pump() const { return sfg_pump_oam(classical_oam_1550, pump_oam_795); }

void ExperimentConfig::validate() const {
  if (truncation < 1) config_error(fmt::format("source.truncation = {} must be >= 1", truncation));
  if (std::abs(classical_oam_1550.value) > truncation) {
    config_error(fmt::format("source.classical_oam_1550 = {} exceeds truncation {}", classical_oam_1550.value,
                             truncation));
  }
  if (std::abs(pump_oam_795.value) > truncation) {
    config_error(
        fmt::format("source.pump_oam_795 = {} exceeds truncation {}", pump_oam_795.value, truncation));
  }
  if (std::abs(pump().value) > truncation) {
    config_error(fmt::format("up-converted pump charge {} exceeds truncation {}", pump().value, truncation));
  }
  if (!(sigma > 0.0)) config_error(fmt::format("source.sigma = {} must be > 0", sigma));
  try {
    noise.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (!(white_noise >= 0.0 && white_noise <= 1.0)) {
    config_error(fmt::format("noise.white_noise = {} outside [0, 1]", white_noise));
  }
  if (subspace_l < 1 || subspace_l > truncation) {
    config_error(fmt::format("measurement.subspace_l = {} outside [1, {}]", subspace_l, truncation));
  }
  if (!(integration_time > 0.0)) {
    config_error(fmt::format("measurement.integration_time = {} must be > 0", integration_time));
  }
  if (output_dir.empty()) config_error("run.output_dir is empty");
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.noise.crosstalk_eps = 0.05;
  c.noise.accidental_rate = 10.0;
  c.noise.eta_eigen = 1.0;
  c.noise.eta_super = 1.0;
  const JointOamState state(gaussian_spiral_spectrum(c.pump(), c.sigma, c.truncation));
  c.noise.rate_constant =
      calibrate_rate_constant(state, c.noise, kReferenceIntegrationTime, kReferencePeakCounts);
  return c;
}

std::uint64_t parse_seed(std::string_view text) {
  text = trim(text);
  std::uint64_t out = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (text.empty() || ec != std::errc() || ptr != end) {
    config_error(fmt::format("seed '{}' is not an unsigned 64-bit integer", text));
  }
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config = ExperimentConfig::defaults();
  const auto& table = schema();
  std::string section;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') config_error(fmt::format("line {}: malformed section header", line_no));
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!table.contains(section)) config_error(fmt::format("line {}: unknown section [{}]", line_no, section));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) config_error(fmt::format("line {}: expected key = value", line_no));
    const std::string key(trim(line.substr(0, eq)));
    if (section.empty()) config_error(fmt::format("line {}: key '{}' outside any section", line_no, key));
    const auto& keys = table.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) config_error(fmt::format("line {}: unknown key {}.{}", line_no, section, key));
    if (!seen.insert(section + "." + key).second) {
      config_error(fmt::format("line {}: duplicate key {}.{}", line_no, section, key));
    }
    it->second(config, key, parse_value(trim(line.substr(eq + 1)), line_no));
  }
  config.validate();
  return config;
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  out += "[source]\n";
  out += fmt::format("classical_oam_1550 = {}\n", c.classical_oam_1550.value);
  out += fmt::format("pump_oam_795 = {}\n", c.pump_oam_795.value);
  out += fmt::format("sigma = {}\n", number(c.sigma));
  out += fmt::format("truncation = {}\n", c.truncation);
  out += "\n[noise]\n";
  out += fmt::format("crosstalk_eps = {}\n", number(c.noise.crosstalk_eps));
  out += fmt::format("accidental_rate = {}\n", number(c.noise.accidental_rate));
  out += fmt::format("eta_eigen = {}\n", number(c.noise.eta_eigen));
  out += fmt::format("eta_super = {}\n", number(c.noise.eta_super));
  out += fmt::format("rate_constant = {}\n", number(c.noise.rate_constant));
  out += fmt::format("white_noise = {}\n", number(c.white_noise));
  out += "\n[measurement]\n";
  out += fmt::format("subspace_l = {}\n", c.subspace_l);
  out += fmt::format("integration_time = {}\n", number(c.integration_time));
  out += "\n[run]\n";
  out += fmt::format("seed = {}\n", c.seed);
  out += fmt::format("output_dir = {}\n", quote(c.output_dir));
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_config(text);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Config) throw;
    std::string_view msg = e.what();
    const std::string_view prefix = to_string(ErrorKind::Config);
    if (msg.starts_with(prefix)) msg.remove_prefix(prefix.size() + 2);
    throw Error(ErrorKind::Config, path.string() + ": " + std::string(msg));
  }
}

}  // namespace oamlink
