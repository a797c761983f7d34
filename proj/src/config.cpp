#include "fracslice/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace fracslice {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

double parse_number(const std::string& text) {
  std::string t = trim(text);
  size_t slash = t.find('/');
  try {
    if (slash != std::string::npos) {
      size_t pos_n = 0, pos_d = 0;
      std::string num = trim(t.substr(0, slash));
      std::string den = trim(t.substr(slash + 1));
      double p = std::stod(num, &pos_n);
      double q = std::stod(den, &pos_d);
      if (pos_n != num.size() || pos_d != den.size() || q == 0)
        throw config_error("bad fraction: " + text);
      return p / q;
    }
    size_t pos = 0;
    double v = std::stod(t, &pos);
    if (pos != t.size()) throw config_error("trailing characters in number: " + text);
    return v;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    throw config_error("not a number: " + text);
  }
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw config_error(origin + ":" + std::to_string(lineno) + ": empty section name");
      cfg.data_[section];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(lineno) + ": expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.data_[section][key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = data_.find(section);
  return s != data_.end() && s->second.count(key) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  auto s = data_.find(section);
  if (s == data_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return parse_number(get_string(section, key, ""));
  } catch (const config_error& e) {
    throw config_error("[" + section + "] " + key + ": " + e.what());
  }
}

int64_t Config::get_int(const std::string& section, const std::string& key, int64_t fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get_string(section, key, "");
  try {
    size_t pos = 0;
    int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw config_error("trailing characters");
    return r;
  } catch (const std::exception&) {
    throw config_error("[" + section + "] " + key + ": not an integer: " + v);
  }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get_string(section, key, "");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw config_error("[" + section + "] " + key + ": not a boolean: " + v);
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  data_[section][key] = value;
}

std::map<std::string, std::string> Config::entries() const {
  std::map<std::string, std::string> flat;
  for (const auto& [sec, kv] : data_)
    for (const auto& [k, v] : kv) flat[sec + "." + k] = v;
  return flat;
}

std::string Config::echo() const {
  std::ostringstream out;
  for (const auto& [sec, kv] : data_) {
    out << "[" << sec << "]\n";
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
  }
  return out.str();
}

}  // namespace fracslice
