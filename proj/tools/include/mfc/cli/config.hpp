#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mfc::cli {

/// Sectioned key=value text:
///
///     # comment
///     [section]
///     key = value
///
/// Keys are unique within a section. Every key that a command does not read
/// is an error, reported with its line.
class Config {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  /// Throws ConfigError("<source>:<line>: ...").
  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::string& path);

  const std::string& source() const noexcept { return source_; }
  bool has_section(const std::string& name) const { return sections_.count(name) != 0; }
  std::vector<std::string> section_names() const;

  /// Sets or replaces a value (command-line overrides).
  void set(const std::string& section, const std::string& key, const std::string& value);

  /// Throws ConfigError for the first section not in `allowed`.
  void require_sections_within(const std::vector<std::string>& allowed) const;

  /// 16 hex digits of FNV-1a over the canonical `section.key=value` lines,
  /// skipping the `section.key` names in `ignore`.
  std::string hash(const std::set<std::string>& ignore = {}) const;

 private:
  friend class Section;
  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::size_t> section_lines_;
};

/// Typed, tracked view of one section. Missing sections read as empty.
class Section {
 public:
  Section(const Config& config, std::string name);

  const std::string& name() const noexcept { return name_; }
  bool present() const noexcept { return entries_ != nullptr; }
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::optional<std::string>& fallback = {});
  double get_double(const std::string& key, std::optional<double> fallback = {});
  std::size_t get_size(const std::string& key, std::optional<std::size_t> fallback = {});
  std::uint64_t get_u64(const std::string& key, std::optional<std::uint64_t> fallback = {});
  bool get_bool(const std::string& key, std::optional<bool> fallback = {});
  std::vector<double> get_doubles(const std::string& key, const std::optional<std::vector<double>>& fallback = {});
  std::vector<std::size_t> get_sizes(const std::string& key,
                                     const std::optional<std::vector<std::size_t>>& fallback = {});
  /// Value must be one of `choices`.
  std::string get_choice(const std::string& key, const std::vector<std::string>& choices,
                         const std::optional<std::string>& fallback = {});

  /// Throws ConfigError naming the first key that was never read.
  void finish() const;
  /// ConfigError pointing at `key` (or the section header when absent).
  [[noreturn]] void error(const std::string& key, const std::string& message) const;

 private:
  const Config::Entry* find(const std::string& key) const;

  const Config* config_;
  std::string name_;
  const std::map<std::string, Config::Entry>* entries_ = nullptr;
  std::set<std::string> used_;
};

}  // namespace mfc::cli
