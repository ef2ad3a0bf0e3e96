#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace metastable {

// Sectioned key/value configuration file:
//
//   [system]
//   b = x - x^3
//   a = 1 + c
//   ...
//
// Values are free text; list values are whitespace-separated.  `#` and `;`
// start comments.  The canonical schema is documented in docs/formats.md.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_int(const std::string& section, const std::string& key, long fallback) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }
    const std::string& origin() const { return origin_; }

    // Canonical serialization (sorted sections/keys) used for content hashing.
    std::string canonical_text() const;

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::string origin_;
};

}  // namespace metastable
