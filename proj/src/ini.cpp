#include "releta/ini.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "releta/error.hpp"

namespace releta {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

const IniEntry* IniSection::find(std::string_view key) const {
  // Later assignments win.
  for (auto it = entries.rbegin(); it != entries.rend(); ++it)
    if (it->key == key) return &*it;
  return nullptr;
}

IniDocument IniDocument::parse(std::string_view text, const std::string& origin) {
  IniDocument doc;
  doc.origin_ = origin;
  doc.sections_.push_back(IniSection{"", 0, {}});
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view raw = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;

    const auto comment = raw.find_first_of("#;");
    std::string_view line = trim(raw.substr(0, comment));
    if (line.empty()) continue;

    auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::kParse, where() + "unterminated section header");
      std::string name(trim(line.substr(1, line.size() - 2)));
      if (name.empty()) fail(ErrorKind::kParse, where() + "empty section name");
      auto existing = std::find_if(doc.sections_.begin(), doc.sections_.end(),
                                   [&](const IniSection& s) { return s.name == name; });
      if (existing != doc.sections_.end()) fail(ErrorKind::kParse, where() + "duplicate section [" + name + "]");
      doc.sections_.push_back(IniSection{std::move(name), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::kParse, where() + "expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) fail(ErrorKind::kParse, where() + "missing key before '='");
    doc.sections_.back().entries.push_back(IniEntry{std::move(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return doc;
}

IniDocument IniDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kRuntime, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

const IniSection* IniDocument::find(std::string_view section) const {
  for (const auto& s : sections_)
    if (s.name == section) return &s;
  return nullptr;
}

std::vector<const IniSection*> IniDocument::with_prefix(std::string_view prefix) const {
  std::vector<const IniSection*> out;
  for (const auto& s : sections_)
    if (s.name.size() > prefix.size() && std::string_view(s.name).substr(0, prefix.size()) == prefix)
      out.push_back(&s);
  return out;
}

void IniDocument::set(std::string_view section, std::string_view key, std::string_view value) {
  auto it = std::find_if(sections_.begin(), sections_.end(), [&](const IniSection& s) { return s.name == section; });
  if (it == sections_.end()) {
    sections_.push_back(IniSection{std::string(section), 0, {}});
    it = std::prev(sections_.end());
  }
  for (auto& e : it->entries) {
    if (e.key == key) {
      e.value = std::string(value);
      return;
    }
  }
  it->entries.push_back(IniEntry{std::string(key), std::string(value), 0});
}

double parse_double(std::string_view text, const std::string& where) {
  text = trim(text);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v))
    fail(ErrorKind::kParse, where + ": expected a number, got '" + std::string(text) + "'");
  return v;
}

std::int64_t parse_int(std::string_view text, const std::string& where) {
  text = trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    fail(ErrorKind::kParse, where + ": expected an integer, got '" + std::string(text) + "'");
  return v;
}

std::uint64_t parse_uint(std::string_view text, const std::string& where) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    fail(ErrorKind::kParse, where + ": expected a non-negative integer, got '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view text, const std::string& where) {
  text = trim(text);
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  fail(ErrorKind::kParse, where + ": expected true/false, got '" + std::string(text) + "'");
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    auto item = trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(std::string_view text, const std::string& where) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(item, where));
  if (out.empty()) fail(ErrorKind::kParse, where + ": expected at least one number");
  return out;
}

}  // namespace releta
