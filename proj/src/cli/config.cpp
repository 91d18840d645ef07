#include "acsum/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "acsum/error.hpp"

namespace acsum {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError("config '" + std::string(key) + "': expected an integer, got '" + std::string(value) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  std::string s(value);
  char* end = nullptr;
  double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw UsageError("config '" + std::string(key) + "': expected a number, got '" + s + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw UsageError("config '" + std::string(key) + "': expected true or false, got '" + std::string(value) + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  auto sz = [&] { return parse_integer<std::size_t>(key, value); };
  if (key == "hidden") model.hidden = sz();
  else if (key == "embed") model.embed = sz();
  else if (key == "attention") model.attention = parse_bool(key, value);
  else if (key == "init_scale") model.init_scale = parse_double(key, value);
  else if (key == "learning_rate") train.learning_rate = parse_double(key, value);
  else if (key == "batch_size") train.batch_size = sz();
  else if (key == "actor_epochs") train.actor_epochs = sz();
  else if (key == "critic_epochs") train.critic_epochs = sz();
  else if (key == "joint_epochs") train.joint_epochs = sz();
  else if (key == "gamma") train.gamma = parse_double(key, value);
  else if (key == "max_steps") train.max_steps = sz();
  else if (key == "clip_norm") train.clip_norm = parse_double(key, value);
  else if (key == "seed") train.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "xe_weight") train.xe_weight = parse_double(key, value);
  else if (key == "log_every") train.log_every = sz();
  else if (key == "checkpoint_every") train.checkpoint_every = sz();
  else if (key == "vocab_max_size") vocab_max_size = sz();
  else if (key == "min_count") min_count = sz();
  else throw UsageError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::merge_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(n) + ": expected key=value");
    set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  merge_text(buf.str());
}

std::map<std::string, std::string> RunConfig::to_map() const {
  return {
      {"hidden", std::to_string(model.hidden)},
      {"embed", std::to_string(model.embed)},
      {"attention", model.attention ? "true" : "false"},
      {"init_scale", format_double(model.init_scale)},
      {"learning_rate", format_double(train.learning_rate)},
      {"batch_size", std::to_string(train.batch_size)},
      {"actor_epochs", std::to_string(train.actor_epochs)},
      {"critic_epochs", std::to_string(train.critic_epochs)},
      {"joint_epochs", std::to_string(train.joint_epochs)},
      {"gamma", format_double(train.gamma)},
      {"max_steps", std::to_string(train.max_steps)},
      {"clip_norm", format_double(train.clip_norm)},
      {"seed", std::to_string(train.seed)},
      {"xe_weight", format_double(train.xe_weight)},
      {"log_every", std::to_string(train.log_every)},
      {"checkpoint_every", std::to_string(train.checkpoint_every)},
      {"vocab_max_size", std::to_string(vocab_max_size)},
      {"min_count", std::to_string(min_count)},
  };
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& entries) {
  RunConfig c;
  for (const auto& [k, v] : entries) c.set(k, v);
  return c;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_map()) out += k + "=" + v + "\n";
  return out;
}

}  // namespace acsum
