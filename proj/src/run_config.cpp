#include "tapt/run_config.hpp"

#include <charconv>
#include <fstream>
#include <istream>

namespace tapt {

std::string_view to_string(Profile profile) { return profile == Profile::Desk ? "desk" : "paper"; }

FusionConfig RunConfig::fusion_config(int vocab_size, int emoji_dim) const {
  return profile == Profile::Desk ? FusionConfig::desk(vocab_size, emoji_dim)
                                  : FusionConfig::paper(vocab_size, emoji_dim);
}

namespace {

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError("invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

bool parse_switch(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw UsageError("invalid value for " + key + ": '" + value + "' (expected on|off)");
}

int parse_range(const std::string& key, const std::string& value, int lo, int hi) {
  const int v = parse_value<int>(key, value);
  if (v < lo || v > hi) {
    throw UsageError(key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return v;
}

double parse_rate(const std::string& key, const std::string& value) {
  const double v = parse_value<double>(key, value);
  if (!(v > 0 && v <= 1)) throw UsageError(key + " must lie in (0, 1]");
  return v;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "profile") {
    if (value == "desk") {
      profile = Profile::Desk;
    } else if (value == "paper") {
      profile = Profile::Paper;
    } else {
      throw UsageError("profile must be desk or paper");
    }
  } else if (key == "seed") {
    seed = parse_value<std::uint64_t>(key, value);
  } else if (key == "data") {
    data = value;
  } else if (key == "emoji") {
    emoji = value;
  } else if (key == "dict") {
    dict = value;
  } else if (key == "out") {
    out = value;
  } else if (key == "tapt_checkpoint") {
    tapt_checkpoint = value;
  } else if (key == "epochs") {
    epochs = parse_range(key, value, 1, 100000);
  } else if (key == "tapt_epochs") {
    tapt_epochs = parse_range(key, value, 1, 100000);
  } else if (key == "lr") {
    lr = parse_rate(key, value);
  } else if (key == "tapt_lr") {
    tapt_lr = parse_rate(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_range(key, value, 1, 4096);
  } else if (key == "train_fraction") {
    train_fraction = parse_value<double>(key, value);
    if (!(train_fraction > 0 && train_fraction < 1)) throw UsageError("train_fraction must lie in (0, 1)");
  } else if (key == "tapt") {
    tapt = parse_switch(key, value);
  } else if (key == "clean_dup") {
    clean_dup = parse_switch(key, value);
  } else if (key == "tapt_corpus") {
    if (value != "train" && value != "all") throw UsageError("tapt_corpus must be train or all");
    tapt_corpus_all = value == "all";
  } else if (key == "fine_training") {
    if (value == "all") {
      fine_set = FineTrainingSet::AllPosts;
    } else if (value == "hostile") {
      fine_set = FineTrainingSet::HostileOnly;
    } else {
      throw UsageError("fine_training must be all or hostile");
    }
  } else if (key == "split") {
    if (value != "all" && value != "train" && value != "val") throw UsageError("split must be all, train or val");
    eval_split = value;
  } else {
    throw UsageError("unknown configuration key '" + key + "'");
  }
}

void RunConfig::load(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(source + ":" + std::to_string(lineno) + ": expected key=value");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  load(in, path.string());
}

}  // namespace tapt
