#include "hwy/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

namespace hwy {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(key, "cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) parts.push_back(trim(part));
  return parts;
}

template <typename T>
std::string format(T value) {
  std::ostringstream os;
  if constexpr (std::is_floating_point_v<T>) {
    os << std::setprecision(std::numeric_limits<T>::max_digits10);
  }
  os << value;
  return os.str();
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Access>
Field number(std::string key, Access access) {
  return Field{
      key,
      [key, access](RunConfig& c, const std::string& v) {
        access(c) = parse_number<T>(key, v);
      },
      [access](const RunConfig& c) {
        return format(access(const_cast<RunConfig&>(c)));
      }};
}

template <typename Access>
Field boolean(std::string key, Access access) {
  return Field{
      key,
      [key, access](RunConfig& c, const std::string& v) {
        access(c) = parse_bool(key, v);
      },
      [access](const RunConfig& c) {
        return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false");
      }};
}

template <typename Access>
Field range(std::string key, Access access) {
  return Field{
      key,
      [key, access](RunConfig& c, const std::string& v) {
        const auto parts = split_commas(v);
        if (parts.size() != 2) {
          throw ConfigError(key, "expected 'min,max', got '" + v + "'");
        }
        access(c) = SpeedRange{parse_number<double>(key, parts[0]),
                               parse_number<double>(key, parts[1])};
      },
      [access](const RunConfig& c) {
        const SpeedRange r = access(const_cast<RunConfig&>(c));
        return format(r.min) + "," + format(r.max);
      }};
}

Field hidden_widths() {
  const std::string key = "train.hidden";
  return Field{
      key,
      [key](RunConfig& c, const std::string& v) {
        std::vector<int> widths;
        for (const auto& p : split_commas(v)) {
          widths.push_back(parse_number<int>(key, p));
        }
        if (widths.empty()) throw ConfigError(key, "needs at least one width");
        c.train.hidden = widths;
      },
      [](const RunConfig& c) {
        std::string out;
        for (std::size_t i = 0; i < c.train.hidden.size(); ++i) {
          if (i) out += ",";
          out += std::to_string(c.train.hidden[i]);
        }
        return out;
      }};
}

#define HWY_ACCESS(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      number<int>("n_lanes", HWY_ACCESS(env.n_lanes)),
      number<int>("n_vehicles", HWY_ACCESS(env.n_vehicles)),
      number<double>("d_long", HWY_ACCESS(env.d_long)),
      number<double>("d_gap_min", HWY_ACCESS(env.d_gap_min)),
      range("rear_speed", HWY_ACCESS(env.rear_speed)),
      range("front_speed", HWY_ACCESS(env.front_speed)),
      range("ego_speed", HWY_ACCESS(env.ego_speed)),
      range("desired_speed", HWY_ACCESS(env.desired_speed)),
      number<double>("ego_desired_speed", HWY_ACCESS(env.ego_desired_speed)),
      number<double>("episode_length", HWY_ACCESS(env.episode_length)),
      number<double>("noise_level", HWY_ACCESS(env.noise_level)),
      boolean("dynamic_actors", HWY_ACCESS(env.dynamic_actors)),
      number<std::uint64_t>("seed", HWY_ACCESS(env.seed)),
      number<double>("decision_dt", HWY_ACCESS(env.decision_dt)),
      number<double>("physics_dt", HWY_ACCESS(env.physics_dt)),
      number<double>("ds_max", HWY_ACCESS(env.ds_max)),
      number<double>("v_max", HWY_ACCESS(env.v_max)),
      number<double>("ttc_threshold", HWY_ACCESS(env.ttc_threshold)),
      number<double>("lane_change_cooldown", HWY_ACCESS(env.lane_change_cooldown)),
      number<int>("max_ticks", HWY_ACCESS(env.max_ticks)),

      number<double>("idm.a_max", HWY_ACCESS(env.idm.a_max)),
      number<double>("idm.a_min", HWY_ACCESS(env.idm.a_min)),
      number<double>("idm.delta", HWY_ACCESS(env.idm.delta)),
      number<double>("idm.d0", HWY_ACCESS(env.idm.d0)),
      number<double>("idm.time_headway", HWY_ACCESS(env.idm.time_headway)),
      number<double>("idm.b", HWY_ACCESS(env.idm.b)),
      number<double>("idm.d_max_empty", HWY_ACCESS(env.idm.d_max_empty)),

      number<double>("mobil.b_safe", HWY_ACCESS(env.mobil.b_safe)),
      number<double>("mobil.politeness_side", HWY_ACCESS(env.mobil.politeness_side)),
      number<double>("mobil.politeness_rear", HWY_ACCESS(env.mobil.politeness_rear)),
      number<double>("mobil.a_threshold", HWY_ACCESS(env.mobil.a_threshold)),

      number<double>("steering.near_dist", HWY_ACCESS(env.steering.near_dist)),
      number<double>("steering.far_dist", HWY_ACCESS(env.steering.far_dist)),
      number<double>("steering.k_far", HWY_ACCESS(env.steering.k_far)),
      number<double>("steering.k_near", HWY_ACCESS(env.steering.k_near)),
      number<double>("steering.k_int", HWY_ACCESS(env.steering.k_int)),
      number<double>("steering.max_steer", HWY_ACCESS(env.steering.max_steer)),

      number<double>("kinematics.wheelbase", HWY_ACCESS(env.kinematics.wheelbase)),
      number<double>("kinematics.rear_length", HWY_ACCESS(env.kinematics.rear_length)),

      number<double>("rewards.lane_change", HWY_ACCESS(env.rewards.lane_change)),
      number<double>("rewards.off_road", HWY_ACCESS(env.rewards.off_road)),
      number<double>("rewards.collision", HWY_ACCESS(env.rewards.collision)),
      number<double>("rewards.ttc_violation", HWY_ACCESS(env.rewards.ttc_violation)),
      number<double>("rewards.goal", HWY_ACCESS(env.rewards.goal)),

      number<long>("train.total_steps", HWY_ACCESS(train.total_steps)),
      number<double>("train.gamma", HWY_ACCESS(train.gamma)),
      number<double>("train.learning_rate", HWY_ACCESS(train.learning_rate)),
      number<int>("train.batch_size", HWY_ACCESS(train.batch_size)),
      number<std::size_t>("train.buffer_capacity", HWY_ACCESS(train.buffer_capacity)),
      number<double>("train.epsilon_start", HWY_ACCESS(train.epsilon_start)),
      number<double>("train.epsilon_end", HWY_ACCESS(train.epsilon_end)),
      number<long>("train.epsilon_decay_steps", HWY_ACCESS(train.epsilon_decay_steps)),
      number<long>("train.target_sync", HWY_ACCESS(train.target_sync)),
      number<long>("train.learning_starts", HWY_ACCESS(train.learning_starts)),
      number<long>("train.fast_period", HWY_ACCESS(train.fast_period)),
      number<int>("train.fast_episodes", HWY_ACCESS(train.fast_episodes)),
      number<long>("train.slow_period", HWY_ACCESS(train.slow_period)),
      number<int>("train.slow_episodes", HWY_ACCESS(train.slow_episodes)),
      hidden_widths(),
      number<std::uint64_t>("train.seed", HWY_ACCESS(train.seed)),
  };
  return table;
}

#undef HWY_ACCESS

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Position of the first whole-word occurrence, or npos.
std::size_t find_word(const std::string& text, const std::string& word) {
  for (auto pos = text.find(word); pos != std::string::npos;
       pos = text.find(word, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
    const auto end = pos + word.size();
    const bool right_ok = end == text.size() || !is_word_char(text[end]);
    if (left_ok && right_ok) return pos;
  }
  return std::string::npos;
}

// Maps a validate() message back to the key it is about, best effort.
std::string guess_key(const std::string& message) {
  std::string best;
  std::size_t best_pos = std::string::npos;
  std::size_t best_len = 0;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string leaf = dot == std::string::npos ? f.key : f.key.substr(dot + 1);
    const std::size_t pos = find_word(message, leaf);
    if (pos == std::string::npos) continue;
    if (best.empty() || pos < best_pos || (pos == best_pos && leaf.size() > best_len)) {
      best = f.key;
      best_pos = pos;
      best_len = leaf.size();
    }
  }
  return best;
}

}  // namespace

ConfigError::ConfigError(std::string key, const std::string& message)
    : std::runtime_error(key.empty() ? message : key + ": " + message),
      key_(std::move(key)) {}

void RunConfig::validate() const {
  try {
    env.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(guess_key(e.what()), e.what());
  }
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) +
                                ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Field* field = find_field(key);
    if (!field) throw ConfigError(key, "unknown key");
    if (value.empty()) throw ConfigError(key, "missing value");
    field->set(config, value);
  }
  config.validate();
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& config) {
  for (const auto& f : fields()) {
    out << f.key << " = " << f.get(config) << "\n";
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

}  // namespace hwy
