#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace releta {

// Sectioned `key = value` text. Sections are `[name]`; `#` and `;` start
// comments; keys before the first section belong to the unnamed section "".
// Order of sections and keys is preserved.
struct IniEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct IniSection {
  std::string name;
  std::size_t line = 0;
  std::vector<IniEntry> entries;

  const IniEntry* find(std::string_view key) const;
};

class IniDocument {
 public:
  // Throws Error(kParse) with "<origin>:<line>: ..." on malformed input.
  static IniDocument parse(std::string_view text, const std::string& origin = "<string>");
  static IniDocument load(const std::filesystem::path& path);

  const std::vector<IniSection>& sections() const { return sections_; }
  const IniSection* find(std::string_view section) const;
  std::vector<const IniSection*> with_prefix(std::string_view prefix) const;

  // Adds or replaces a key; creates the section if needed.
  void set(std::string_view section, std::string_view key, std::string_view value);

  const std::string& origin() const { return origin_; }

 private:
  std::vector<IniSection> sections_;
  std::string origin_;
};

// Value conversion helpers. All throw Error(kParse) naming `where` on failure.
double parse_double(std::string_view text, const std::string& where);
std::int64_t parse_int(std::string_view text, const std::string& where);
std::uint64_t parse_uint(std::string_view text, const std::string& where);
bool parse_bool(std::string_view text, const std::string& where);
std::vector<std::string> split_list(std::string_view text);
std::vector<double> parse_double_list(std::string_view text, const std::string& where);

std::string_view trim(std::string_view s);

}  // namespace releta
