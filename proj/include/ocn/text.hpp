#pragma once

#include <cctype>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ocn/util.hpp"

namespace ocn {

// Lowercased, punctuation-separated whitespace tokens. ASCII punctuation
// becomes a single-character token; multi-byte UTF-8 sequences pass through.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : text) {
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && !std::isalnum(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
  }
  flush();
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s.push_back(' ');
    s += tokens[i];
  }
  return s;
}

// Reserved vocabulary entries, in id order. Speaker tokens stay uppercase so
// they can never collide with lowercased text tokens; the ATOMIC relation
// tokens are reserved so the special-token pseudo-sentence rendering and
// tail-only masking have stable ids.
inline const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> toks = {
      "[pad]",    "[unk]",   "[mask]",   "[cls]",    "[sep]",     "M",
      "W",        "[blank]", "[xintent]", "[xneed]",  "[xattr]",   "[xeffect]",
      "[xreact]", "[xwant]", "[oeffect]", "[oreact]", "[owant]"};
  return toks;
}

constexpr int kPadId = 0;
constexpr int kUnkId = 1;
constexpr int kMaskId = 2;
constexpr int kClsId = 3;
constexpr int kSepId = 4;
constexpr int kSpeakerMId = 5;
constexpr int kSpeakerWId = 6;
constexpr int kBlankId = 7;
constexpr int kFirstRelationId = 8;
constexpr int kLastRelationId = 16;

class Vocabulary {
 public:
  Vocabulary() {
    for (const auto& t : reserved_tokens()) add(t);
  }

  // Returns the id, inserting the token if it is new.
  int add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_[token] = id;
    return id;
  }

  // Exact match first (reserved tokens keep their case), UNK otherwise.
  int lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnkId : it->second;
  }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  const std::string& token(int id) const {
    if (id < 0 || id >= static_cast<int>(tokens_.size()))
      throw std::invalid_argument("Vocabulary: id " + std::to_string(id) + " out of range");
    return tokens_[id];
  }

  int size() const { return static_cast<int>(tokens_.size()); }

  static bool is_reserved(int id) {
    return id >= 0 && id < static_cast<int>(reserved_tokens().size());
  }

  std::vector<int> ids_of(const std::vector<std::string>& toks) const {
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(lookup(t));
    return ids;
  }

  // One token per line, line number = id, reserved tokens first.
  void save(const std::string& path) const {
    std::string out;
    for (const auto& t : tokens_) {
      out += t;
      out.push_back('\n');
    }
    write_file_atomic(path, out);
  }

  static Vocabulary load(const std::string& path) {
    const auto lines = read_lines(path);
    const auto& reserved = reserved_tokens();
    if (lines.size() < reserved.size())
      throw std::runtime_error("vocabulary file too short: " + path);
    for (std::size_t i = 0; i < reserved.size(); ++i)
      if (lines[i] != reserved[i])
        throw std::runtime_error("vocabulary file " + path + ": line " + std::to_string(i + 1) +
                                 " should be reserved token '" + reserved[i] + "', got '" +
                                 lines[i] + "'");
    Vocabulary v;
    for (std::size_t i = reserved.size(); i < lines.size(); ++i) {
      if (lines[i].empty())
        throw std::runtime_error("vocabulary file " + path + ": empty token at line " +
                                 std::to_string(i + 1));
      if (v.contains(lines[i]))
        throw std::runtime_error("vocabulary file " + path + ": duplicate token '" + lines[i] +
                                 "' at line " + std::to_string(i + 1));
      v.add(lines[i]);
    }
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace ocn
