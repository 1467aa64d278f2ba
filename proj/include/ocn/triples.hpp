#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ocn/text.hpp"
#include "ocn/util.hpp"

#include "json.hpp"

namespace ocn {

enum class KbSource { ConceptNet, Atomic };

inline std::string to_string(KbSource s) {
  return s == KbSource::ConceptNet ? "conceptnet" : "atomic";
}

inline KbSource kb_source_from(const std::string& s) {
  if (s == "conceptnet") return KbSource::ConceptNet;
  if (s == "atomic") return KbSource::Atomic;
  throw std::invalid_argument("unknown knowledge source: " + s);
}

struct KnowledgeTriple {
  std::string head;
  std::string relation;
  std::string tail;
  KbSource source = KbSource::ConceptNet;
  double weight = 1.0;
  std::string speaker;  // set for dialogue-derived ATOMIC triples

  bool operator==(const KnowledgeTriple& o) const {
    return head == o.head && relation == o.relation && tail == o.tail && source == o.source &&
           speaker == o.speaker;
  }
};

struct PseudoSentence {
  std::vector<std::string> tokens;
  KnowledgeTriple origin;

  std::string text() const { return join_tokens(tokens); }
};

// ConceptNet 5 relation inventory.
inline const std::unordered_set<std::string>& conceptnet_relations() {
  static const std::unordered_set<std::string> rels = {
      "RelatedTo",     "FormOf",        "IsA",           "PartOf",        "HasA",
      "UsedFor",       "CapableOf",     "AtLocation",    "Causes",        "HasSubevent",
      "HasFirstSubevent", "HasLastSubevent", "HasPrerequisite", "HasProperty",
      "MotivatedByGoal", "ObstructedBy", "Desires",      "CreatedBy",     "Synonym",
      "Antonym",       "DistinctFrom",  "DerivedFrom",   "SymbolOf",      "DefinedAs",
      "MannerOf",      "LocatedNear",   "HasContext",    "SimilarTo",     "CausesDesire",
      "MadeOf",        "ReceivesAction", "InstanceOf",   "Entails",       "NotDesires",
      "NotUsedFor",    "NotCapableOf",  "NotHasProperty", "EtymologicallyRelatedTo",
      "EtymologicallyDerivedFrom"};
  return rels;
}

// The nine ATOMIC relation types with their plain-word expansions; the
// x- prefix is dropped, the o- prefix reads "others".
inline const std::vector<std::pair<std::string, std::vector<std::string>>>& atomic_relation_map() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> m = {
      {"xIntent", {"intent"}},          {"xNeed", {"need"}},
      {"xAttr", {"attribute"}},         {"xEffect", {"effect"}},
      {"xReact", {"react"}},            {"xWant", {"want"}},
      {"oEffect", {"others", "effect"}}, {"oReact", {"others", "react"}},
      {"oWant", {"others", "want"}}};
  return m;
}

inline bool is_atomic_relation(const std::string& rel) {
  for (const auto& [name, _] : atomic_relation_map())
    if (name == rel) return true;
  return false;
}

// "[xintent]"-style single reserved token for a relation.
inline std::string atomic_relation_token(const std::string& rel) {
  std::string t = rel;
  for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return "[" + t + "]";
}

// Splits CamelCase at uppercase boundaries and lowercases: AtLocation -> at location.
inline std::vector<std::string> split_camel_case(const std::string& name) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : name) {
    if (std::isupper(static_cast<unsigned char>(c)) && !cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
    cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

inline PseudoSentence cn_triple_to_pseudo(const KnowledgeTriple& t) {
  if (t.source != KbSource::ConceptNet)
    throw std::invalid_argument("cn_triple_to_pseudo: triple source is not conceptnet");
  if (!conceptnet_relations().count(t.relation))
    throw std::invalid_argument("cn_triple_to_pseudo: unknown ConceptNet relation '" +
                                t.relation + "'");
  PseudoSentence ps;
  ps.origin = t;
  for (auto& w : tokenize(t.head)) ps.tokens.push_back(w);
  for (auto& w : split_camel_case(t.relation)) ps.tokens.push_back(w);
  for (auto& w : tokenize(t.tail)) ps.tokens.push_back(w);
  return ps;
}

enum class RelationRendering { Expanded, SpecialToken };

// ATOMIC: the head becomes the speaker token for dialogue-derived triples or
// the blank token for option-derived ones; the relation maps through the
// fixed nine-type table; the tail is kept.
inline PseudoSentence atomic_triple_to_pseudo(const KnowledgeTriple& t,
                                              RelationRendering rendering =
                                                  RelationRendering::Expanded) {
  if (t.source != KbSource::Atomic)
    throw std::invalid_argument("atomic_triple_to_pseudo: triple source is not atomic");
  const std::vector<std::string>* expansion = nullptr;
  for (const auto& [name, words] : atomic_relation_map())
    if (name == t.relation) expansion = &words;
  if (expansion == nullptr)
    throw std::invalid_argument("atomic_triple_to_pseudo: relation '" + t.relation +
                                "' is not one of the 9 ATOMIC types");
  PseudoSentence ps;
  ps.origin = t;
  ps.tokens.push_back(t.speaker.empty() ? "[blank]" : t.speaker);
  if (rendering == RelationRendering::Expanded) {
    for (const auto& w : *expansion) ps.tokens.push_back(w);
  } else {
    ps.tokens.push_back(atomic_relation_token(t.relation));
  }
  for (auto& w : tokenize(t.tail)) ps.tokens.push_back(w);
  return ps;
}

inline PseudoSentence triple_to_pseudo(const KnowledgeTriple& t,
                                       RelationRendering rendering =
                                           RelationRendering::Expanded) {
  return t.source == KbSource::ConceptNet ? cn_triple_to_pseudo(t)
                                          : atomic_triple_to_pseudo(t, rendering);
}

// Keeps at most m_cap triples, descending KB weight, ties broken by
// lexicographic pseudo-sentence so capping is deterministic.
inline std::vector<KnowledgeTriple> cap_triples(std::vector<KnowledgeTriple> triples,
                                                std::size_t m_cap) {
  std::vector<std::pair<std::string, std::size_t>> keyed;
  keyed.reserve(triples.size());
  for (std::size_t i = 0; i < triples.size(); ++i)
    keyed.emplace_back(triple_to_pseudo(triples[i]).text(), i);
  std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    const auto& ta = triples[a.second];
    const auto& tb = triples[b.second];
    if (ta.weight != tb.weight) return ta.weight > tb.weight;
    return a.first < b.first;
  });
  std::vector<KnowledgeTriple> out;
  out.reserve(std::min(m_cap, keyed.size()));
  for (std::size_t i = 0; i < keyed.size() && out.size() < m_cap; ++i)
    out.push_back(triples[keyed[i].second]);
  return out;
}

// ---------------------------------------------------------------------------
// Extracted-triples file: JSONL, one record per question/segment group.
// option_id is the option index as a string, or "context".
// ---------------------------------------------------------------------------

struct TripleGroup {
  std::string question_id;
  std::string option_id;  // "0".."k" or "context"
  std::vector<KnowledgeTriple> triples;
};

struct QuestionTriples {
  std::vector<KnowledgeTriple> context;
  std::map<int, std::vector<KnowledgeTriple>> per_option;
};

inline nlohmann::json triple_to_json(const KnowledgeTriple& t) {
  nlohmann::json j{{"head", t.head},
                   {"relation", t.relation},
                   {"tail", t.tail},
                   {"source", to_string(t.source)},
                   {"weight", t.weight}};
  if (!t.speaker.empty()) j["speaker"] = t.speaker;
  return j;
}

inline KnowledgeTriple triple_from_json(const nlohmann::json& j) {
  KnowledgeTriple t;
  t.head = j.at("head").get<std::string>();
  t.relation = j.at("relation").get<std::string>();
  t.tail = j.at("tail").get<std::string>();
  t.source = kb_source_from(j.at("source").get<std::string>());
  t.weight = j.value("weight", 1.0);
  t.speaker = j.value("speaker", std::string());
  return t;
}

inline std::string serialize_triple_groups(const std::vector<TripleGroup>& groups) {
  std::string out;
  for (const auto& g : groups) {
    nlohmann::json j{{"question_id", g.question_id}, {"option_id", g.option_id}};
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : g.triples) arr.push_back(triple_to_json(t));
    j["triples"] = arr;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline void write_triples_jsonl(const std::vector<TripleGroup>& groups, const std::string& path) {
  write_file_atomic(path, serialize_triple_groups(groups));
}

inline std::unordered_map<std::string, QuestionTriples> load_triples_jsonl(
    const std::string& path) {
  std::unordered_map<std::string, QuestionTriples> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
      auto& q = out[j.at("question_id").get<std::string>()];
      const std::string option_id = j.at("option_id").get<std::string>();
      std::vector<KnowledgeTriple>* dst;
      if (option_id == "context") {
        dst = &q.context;
      } else {
        dst = &q.per_option[std::stoi(option_id)];
      }
      for (const auto& tj : j.at("triples")) dst->push_back(triple_from_json(tj));
    } catch (const std::exception& e) {
      throw std::runtime_error("triples file " + path + ": line " + std::to_string(i + 1) +
                               ": " + e.what());
    }
  }
  return out;
}

}  // namespace ocn
