#include "mfc/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mfc/error.hpp"
#include "mfc/rng.hpp"

namespace mfc::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '.' || c == '-';
  });
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  c.source_ = source;
  std::stringstream in(text);
  std::string raw;
  std::size_t line = 0;
  std::string section;
  auto bad = [&](const std::string& what) {
    fail(ErrorKind::ConfigError, source + ":" + std::to_string(line) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') bad("unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!valid_name(section)) bad("bad section name '" + section + "'");
      if (c.sections_.count(section)) bad("duplicate section [" + section + "]");
      c.sections_[section];
      c.section_lines_[section] = line;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) bad("expected key = value");
    if (section.empty()) bad("key outside of any section");
    const std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    if (!valid_name(key)) bad("bad key '" + key + "'");
    auto& entries = c.sections_[section];
    if (entries.count(key)) {
      bad("duplicate key '" + key + "' in [" + section + "] (first at line " +
          std::to_string(entries[key].line) + ")");
    }
    entries[key] = {value, line};
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::vector<std::string> Config::section_names() const {
  std::vector<std::string> out;
  for (const auto& [name, entries] : sections_) out.push_back(name);
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  auto& entry = sections_[section][key];
  entry.value = value;
  section_lines_.emplace(section, 0);
}

void Config::require_sections_within(const std::vector<std::string>& allowed) const {
  for (const auto& [name, entries] : sections_) {
    if (std::find(allowed.begin(), allowed.end(), name) != allowed.end()) continue;
    const auto line = section_lines_.at(name);
    fail(ErrorKind::ConfigError, source_ + ":" + std::to_string(line) + ": section [" + name +
                                     "] is not used by this command");
  }
}

std::string Config::hash(const std::set<std::string>& ignore) const {
  std::string canonical;
  for (const auto& [name, entries] : sections_) {
    for (const auto& [key, entry] : entries) {
      if (!ignore.count(name + "." + key)) canonical += name + "." + key + "=" + entry.value + "\n";
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
  return buf;
}

Section::Section(const Config& config, std::string name) : config_(&config), name_(std::move(name)) {
  if (const auto it = config.sections_.find(name_); it != config.sections_.end()) entries_ = &it->second;
}

bool Section::has(const std::string& key) const { return find(key) != nullptr; }

const Config::Entry* Section::find(const std::string& key) const {
  if (!entries_) return nullptr;
  const auto it = entries_->find(key);
  return it == entries_->end() ? nullptr : &it->second;
}

void Section::error(const std::string& key, const std::string& message) const {
  std::size_t line = 0;
  if (const auto* e = find(key)) {
    line = e->line;
  } else if (const auto it = config_->section_lines_.find(name_); it != config_->section_lines_.end()) {
    line = it->second;
  }
  const std::string where = line ? config_->source_ + ":" + std::to_string(line) : config_->source_;
  fail(ErrorKind::ConfigError, where + ": [" + name_ + "] " + key + ": " + message);
}

std::string Section::get_string(const std::string& key, const std::optional<std::string>& fallback) {
  used_.insert(key);
  if (const auto* e = find(key)) return e->value;
  if (!fallback) error(key, "required key is missing");
  return *fallback;
}

double Section::get_double(const std::string& key, std::optional<double> fallback) {
  used_.insert(key);
  const auto* e = find(key);
  if (!e) {
    if (!fallback) error(key, "required key is missing");
    return *fallback;
  }
  double v = 0.0;
  if (!parse_number(e->value, v)) error(key, "'" + e->value + "' is not a number");
  return v;
}

std::uint64_t Section::get_u64(const std::string& key, std::optional<std::uint64_t> fallback) {
  used_.insert(key);
  const auto* e = find(key);
  if (!e) {
    if (!fallback) error(key, "required key is missing");
    return *fallback;
  }
  std::uint64_t v = 0;
  if (!parse_number(e->value, v)) error(key, "'" + e->value + "' is not a nonnegative integer");
  return v;
}

std::size_t Section::get_size(const std::string& key, std::optional<std::size_t> fallback) {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

bool Section::get_bool(const std::string& key, std::optional<bool> fallback) {
  used_.insert(key);
  const auto* e = find(key);
  if (!e) {
    if (!fallback) error(key, "required key is missing");
    return *fallback;
  }
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  error(key, "'" + e->value + "' is not a boolean (true/false)");
}

std::vector<double> Section::get_doubles(const std::string& key, const std::optional<std::vector<double>>& fallback) {
  used_.insert(key);
  const auto* e = find(key);
  if (!e) {
    if (!fallback) error(key, "required key is missing");
    return *fallback;
  }
  std::vector<double> out;
  for (const auto& item : split_list(e->value)) {
    double v = 0.0;
    if (!parse_number(item, v)) error(key, "list item '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> Section::get_sizes(const std::string& key,
                                            const std::optional<std::vector<std::size_t>>& fallback) {
  used_.insert(key);
  const auto* e = find(key);
  if (!e) {
    if (!fallback) error(key, "required key is missing");
    return *fallback;
  }
  std::vector<std::size_t> out;
  for (const auto& item : split_list(e->value)) {
    std::uint64_t v = 0;
    if (!parse_number(item, v)) error(key, "list item '" + item + "' is not a nonnegative integer");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::string Section::get_choice(const std::string& key, const std::vector<std::string>& choices,
                                const std::optional<std::string>& fallback) {
  const std::string v = get_string(key, fallback);
  if (std::find(choices.begin(), choices.end(), v) == choices.end()) {
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    error(key, "'" + v + "' is not one of " + list);
  }
  return v;
}

void Section::finish() const {
  if (!entries_) return;
  for (const auto& [key, entry] : *entries_) {
    if (!used_.count(key)) error(key, "unknown key");
  }
}

}  // namespace mfc::cli
