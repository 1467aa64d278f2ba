#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ocn/postag.hpp"
#include "ocn/text.hpp"
#include "ocn/triples.hpp"
#include "ocn/util.hpp"

#include "json.hpp"

namespace ocn {

// Relaxed concept-matching rule: a concept matches a sequence when the
// fraction of its tokens found there exceeds the threshold (strictly).
struct MatchRule {
  double threshold = 0.5;
  bool pos_constrained = false;
  bool count_duplicates_once = true;

  void validate() const {
    if (threshold <= 0.0 || threshold > 1.0)
      throw std::invalid_argument("MatchRule: threshold must be in (0,1]");
  }
};

struct KbConcept {
  std::string text;                 // normalized (token-joined) surface form
  std::vector<std::string> tokens;  // lowercase tokens
  std::optional<std::string> pos;
  bool eligible = true;  // false: excluded single-token stop-word concept
};

struct KbEdge {
  int c1 = 0;
  std::string relation;
  int c2 = 0;
  double weight = 1.0;
};

// True iff |tokens of C found in S| / |tokens of C| > threshold. Duplicate
// concept tokens count once under set semantics; a token only counts as
// found when any demanded POS agreement holds.
inline bool concept_matches(const std::vector<std::string>& concept_tokens,
                            const std::optional<std::string>& concept_pos,
                            const std::unordered_set<std::string>& sequence_tokens,
                            const MatchRule& rule) {
  if (concept_tokens.empty()) return false;
  auto found = [&](const std::string& tok) {
    if (!sequence_tokens.count(tok)) return false;
    if (rule.pos_constrained && concept_pos) {
      const auto word_tag = pos_tag(tok);
      if (word_tag && *word_tag != *concept_pos) return false;
    }
    return true;
  };
  std::size_t hits = 0, total = 0;
  if (rule.count_duplicates_once) {
    std::unordered_set<std::string> distinct(concept_tokens.begin(), concept_tokens.end());
    total = distinct.size();
    for (const auto& tok : distinct) hits += found(tok) ? 1 : 0;
  } else {
    total = concept_tokens.size();
    for (const auto& tok : concept_tokens) hits += found(tok) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(total) > rule.threshold;
}

inline bool concept_matches(const std::vector<std::string>& concept_tokens,
                            const std::optional<std::string>& concept_pos,
                            const std::vector<std::string>& sequence_tokens,
                            const MatchRule& rule) {
  return concept_matches(concept_tokens, concept_pos,
                         std::unordered_set<std::string>(sequence_tokens.begin(),
                                                         sequence_tokens.end()),
                         rule);
}

struct KbLoadOptions {
  double malformed_fatal_fraction = 0.01;  // fatal when exceeded
  bool exclude_stopword_concepts = true;   // single-token stop-word concepts
};

struct KbLoadReport {
  std::size_t rows = 0;
  std::vector<std::string> malformed;  // "line N: reason"
};

// Token-inverted index over KB concepts plus the edge table. Immutable after
// build; queries are read-only.
class ConceptNetIndex {
 public:
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int concept_count() const { return static_cast<int>(concepts_.size()); }
  const std::vector<KbEdge>& edges() const { return edges_; }
  const KbConcept& concept_at(int id) const { return concepts_.at(id); }

  // every concept whose token list contains the token
  std::vector<int> lookup_token(const std::string& token) const {
    auto it = inverted_.find(token);
    return it == inverted_.end() ? std::vector<int>{} : it->second;
  }

  // ids of eligible concepts matching the sequence under the rule
  std::set<int> match_set(const std::vector<std::string>& sequence_tokens,
                          const MatchRule& rule) const {
    std::unordered_set<std::string> seq(sequence_tokens.begin(), sequence_tokens.end());
    std::set<int> candidates;
    for (const auto& tok : seq) {
      auto it = inverted_.find(tok);
      if (it == inverted_.end()) continue;
      candidates.insert(it->second.begin(), it->second.end());
    }
    std::set<int> out;
    for (int id : candidates) {
      const KbConcept& c = concepts_[id];
      if (concept_matches(c.tokens, c.pos, seq, rule)) out.insert(id);
    }
    return out;
  }

  const std::vector<int>& edges_touching(int concept_id) const {
    return edges_by_endpoint_.at(concept_id);
  }

  KnowledgeTriple triple_of(int edge_index) const {
    const KbEdge& e = edges_[edge_index];
    KnowledgeTriple t;
    t.head = concepts_[e.c1].text;
    t.relation = e.relation;
    t.tail = concepts_[e.c2].text;
    t.source = KbSource::ConceptNet;
    t.weight = e.weight;
    return t;
  }

  // builder interface (used by the loaders below)
  int intern_concept(const std::string& surface, const std::optional<std::string>& pos,
                     const KbLoadOptions& opts) {
    const auto tokens = tokenize(surface);
    if (tokens.empty()) throw std::invalid_argument("empty concept");
    std::string key = join_tokens(tokens);
    if (pos) key += "\x1f" + *pos;
    auto it = concept_ids_.find(key);
    if (it != concept_ids_.end()) return it->second;
    const int id = static_cast<int>(concepts_.size());
    KbConcept c;
    c.text = join_tokens(tokens);
    c.tokens = tokens;
    c.pos = pos;
    c.eligible = !(opts.exclude_stopword_concepts && tokens.size() == 1 && is_stopword(tokens[0]));
    concepts_.push_back(std::move(c));
    concept_ids_[key] = id;
    edges_by_endpoint_.emplace_back();
    if (concepts_.back().eligible)
      for (const auto& tok : concepts_.back().tokens) {
        auto& bucket = inverted_[tok];
        if (bucket.empty() || bucket.back() != id) bucket.push_back(id);
      }
    return id;
  }

  void add_edge(int c1, const std::string& relation, int c2, double weight) {
    const std::string key = std::to_string(c1) + "\x1f" + relation + "\x1f" + std::to_string(c2);
    auto it = edge_ids_.find(key);
    if (it != edge_ids_.end()) {
      // duplicate edges keep the max weight
      edges_[it->second].weight = std::max(edges_[it->second].weight, weight);
      return;
    }
    const int idx = static_cast<int>(edges_.size());
    edges_.push_back({c1, relation, c2, weight});
    edge_ids_[key] = idx;
    edges_by_endpoint_[c1].push_back(idx);
    if (c2 != c1) edges_by_endpoint_[c2].push_back(idx);
  }

 private:
  std::vector<KbConcept> concepts_;
  std::unordered_map<std::string, int> concept_ids_;
  std::vector<KbEdge> edges_;
  std::unordered_map<std::string, int> edge_ids_;
  std::unordered_map<std::string, std::vector<int>> inverted_;
  std::vector<std::vector<int>> edges_by_endpoint_;
};

namespace detail {

inline std::vector<std::string> split_tab(const std::string& line) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      parts.push_back(line.substr(start));
      break;
    }
    parts.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return parts;
}

inline std::optional<std::string> opt_pos(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

}  // namespace detail

enum class KbFormat { Tsv, Jsonl };

// KB file: one edge per line.
//   TSV:   C1 <tab> relation <tab> C2 <tab> weight [<tab> pos1 <tab> pos2]
//   JSONL: {"c1": ..., "rel": ..., "c2": ..., "weight": ..., "pos1"?, "pos2"?}
inline ConceptNetIndex load_kb(const std::string& path, KbFormat format,
                               const KbLoadOptions& opts = {}, KbLoadReport* report = nullptr) {
  ConceptNetIndex index;
  KbLoadReport local;
  KbLoadReport& rep = report ? *report : local;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    ++rep.rows;
    try {
      std::string c1, rel, c2;
      double weight = 1.0;
      std::optional<std::string> pos1, pos2;
      if (format == KbFormat::Tsv) {
        const auto parts = detail::split_tab(line);
        if (parts.size() != 4 && parts.size() != 6)
          throw std::invalid_argument("expected 4 or 6 tab-separated fields, got " +
                                      std::to_string(parts.size()));
        c1 = parts[0];
        rel = parts[1];
        c2 = parts[2];
        std::size_t used = 0;
        weight = std::stod(parts[3], &used);
        if (used != parts[3].size()) throw std::invalid_argument("bad weight '" + parts[3] + "'");
        if (parts.size() == 6) {
          pos1 = detail::opt_pos(parts[4]);
          pos2 = detail::opt_pos(parts[5]);
        }
      } else {
        const auto j = nlohmann::json::parse(line);
        c1 = j.at("c1").get<std::string>();
        rel = j.at("rel").get<std::string>();
        c2 = j.at("c2").get<std::string>();
        weight = j.value("weight", 1.0);
        if (j.contains("pos1") && !j["pos1"].is_null()) pos1 = j["pos1"].get<std::string>();
        if (j.contains("pos2") && !j["pos2"].is_null()) pos2 = j["pos2"].get<std::string>();
      }
      if (rel.empty()) throw std::invalid_argument("empty relation");
      if (!conceptnet_relations().count(rel))
        throw std::invalid_argument("unknown relation '" + rel + "'");
      if (weight < 0.0) throw std::invalid_argument("negative weight");
      const int id1 = index.intern_concept(c1, pos1, opts);
      const int id2 = index.intern_concept(c2, pos2, opts);
      index.add_edge(id1, rel, id2, weight);
    } catch (const std::exception& e) {
      rep.malformed.push_back("line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (rep.rows > 0 &&
      static_cast<double>(rep.malformed.size()) >
          opts.malformed_fatal_fraction * static_cast<double>(rep.rows)) {
    std::string msg = "KB " + path + ": " + std::to_string(rep.malformed.size()) + " of " +
                      std::to_string(rep.rows) + " rows malformed";
    for (std::size_t i = 0; i < rep.malformed.size() && i < 5; ++i)
      msg += "\n  " + rep.malformed[i];
    throw std::runtime_error(msg);
  }
  return index;
}

inline KbFormat kb_format_for_path(const std::string& path) {
  return path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0 ? KbFormat::Jsonl
                                                                             : KbFormat::Tsv;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

struct ElicitationStats {
  std::size_t candidates_scanned = 0;
  std::size_t matched = 0;
  std::size_t capped = 0;
};

struct ElicitationResult {
  std::string question_id;
  std::vector<std::vector<KnowledgeTriple>> per_option;
  std::vector<KnowledgeTriple> context;  // unused by ConceptNet extraction
  ElicitationStats stats;
};

namespace detail {

// All edges with one endpoint matching the context scope and the other
// matching the option scope, either direction, in deterministic capped order.
inline std::vector<KnowledgeTriple> edges_between(const ConceptNetIndex& index,
                                                  const std::set<int>& scope_ids,
                                                  const std::set<int>& option_ids,
                                                  std::size_t m_cap, ElicitationStats& stats) {
  std::set<int> edge_hits;
  // every qualifying edge has an endpoint in the context scope, so scanning
  // edges touching scope concepts sees all of them, either direction
  for (int cid : scope_ids) {
    for (int eidx : index.edges_touching(cid)) {
      ++stats.candidates_scanned;
      const KbEdge& e = index.edges()[eidx];
      const bool fwd = scope_ids.count(e.c1) && option_ids.count(e.c2);
      const bool rev = scope_ids.count(e.c2) && option_ids.count(e.c1);
      if (fwd || rev) edge_hits.insert(eidx);
    }
  }
  std::vector<KnowledgeTriple> triples;
  triples.reserve(edge_hits.size());
  for (int eidx : edge_hits) triples.push_back(index.triple_of(eidx));
  stats.matched += triples.size();
  auto capped = cap_triples(std::move(triples), m_cap);
  stats.capped += edge_hits.size() - capped.size();
  return capped;
}

}  // namespace detail

// DREAM scope: one endpoint in dialogue+question, the other in the option.
inline ElicitationResult extract_dream(const std::vector<std::string>& dialogue_tokens,
                                       const std::vector<std::string>& question_tokens,
                                       const std::vector<std::vector<std::string>>& option_tokens,
                                       const ConceptNetIndex& index, const MatchRule& rule,
                                       std::size_t m_cap) {
  rule.validate();
  std::vector<std::string> scope = dialogue_tokens;
  scope.insert(scope.end(), question_tokens.begin(), question_tokens.end());
  const std::set<int> scope_ids = index.match_set(scope, rule);
  ElicitationResult res;
  for (const auto& opt : option_tokens) {
    const std::set<int> option_ids = index.match_set(opt, rule);
    res.per_option.push_back(
        detail::edges_between(index, scope_ids, option_ids, m_cap, res.stats));
  }
  return res;
}

// CommonsenseQA scope: only the question is present and used.
inline ElicitationResult extract_csqa(const std::vector<std::string>& question_tokens,
                                      const std::vector<std::vector<std::string>>& option_tokens,
                                      const ConceptNetIndex& index, const MatchRule& rule,
                                      std::size_t m_cap) {
  return extract_dream({}, question_tokens, option_tokens, index, rule, m_cap);
}

// ---------------------------------------------------------------------------
// ATOMIC candidate segmentation: sentences split on terminal punctuation,
// then commas; segments with no verb (per the lexicon, including contracted
// auxiliaries) are dropped.
// ---------------------------------------------------------------------------

struct CandidateSegment {
  std::string text;
  std::string speaker;  // carried for dialogue-role segments
};

namespace detail {

inline bool has_verb(const std::vector<std::string>& tokens) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_verb(tokens[i])) return true;
    // contracted auxiliaries: 's 're 'm 've 'll 'd
    if (tokens[i] == "'" && i + 1 < tokens.size()) {
      const std::string& nxt = tokens[i + 1];
      if (nxt == "s" || nxt == "re" || nxt == "m" || nxt == "ve" || nxt == "ll" || nxt == "d")
        return true;
    }
  }
  return false;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

inline std::vector<CandidateSegment> segment_candidates(const std::string& text,
                                                        const std::string& speaker = "") {
  std::vector<std::string> sentences;
  std::string cur;
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?') {
      sentences.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  sentences.push_back(cur);
  std::vector<CandidateSegment> out;
  for (const auto& sentence : sentences) {
    std::string piece;
    std::vector<std::string> pieces;
    for (char c : sentence) {
      if (c == ',') {
        pieces.push_back(piece);
        piece.clear();
      } else {
        piece.push_back(c);
      }
    }
    pieces.push_back(piece);
    for (auto& p : pieces) {
      const std::string seg = detail::trim(p);
      if (seg.empty()) continue;
      if (!detail::has_verb(tokenize(seg))) continue;
      out.push_back({seg, speaker});
    }
  }
  return out;
}

}  // namespace ocn
