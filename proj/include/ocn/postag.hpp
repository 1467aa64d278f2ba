#pragma once

#include <optional>
#include <string>
#include <unordered_set>

namespace ocn {

// Closed-class lexicon tagger. Open-class words other than lexicon verbs get
// no tag, so a POS constraint simply does not apply to them. Tag values for
// verbs follow the ConceptNet convention ("v"); function-word tags use names
// that can never equal a ConceptNet n/v/a/r tag.

namespace lexicon {

inline const std::unordered_set<std::string>& determiners() {
  static const std::unordered_set<std::string> s = {
      "the",   "a",     "an",      "this", "that", "these", "those",  "each",  "every",
      "either", "neither", "some", "any",  "no",   "all",   "both",   "half",  "several",
      "enough", "much",  "many",   "more", "most", "few",   "little", "own",   "same",
      "such",  "another", "other"};
  return s;
}

inline const std::unordered_set<std::string>& prepositions() {
  static const std::unordered_set<std::string> s = {
      "of",      "in",      "to",      "for",     "with",    "on",     "at",      "by",
      "from",    "about",   "into",    "over",    "after",   "under",  "above",   "across",
      "against", "along",   "among",   "around",  "before",  "behind", "below",   "beneath",
      "beside",  "between", "beyond",  "during",  "except",  "inside", "near",    "off",
      "onto",    "outside", "since",   "through", "throughout", "till", "toward", "towards",
      "underneath", "until", "upon",   "within",  "without", "down",   "out",     "past",
      "per",     "via",     "up"};
  return s;
}

inline const std::unordered_set<std::string>& pronouns() {
  static const std::unordered_set<std::string> s = {
      "i",         "you",      "he",       "she",       "it",       "we",        "they",
      "me",        "him",      "her",      "us",        "them",     "my",        "your",
      "his",       "its",      "our",      "their",     "mine",     "yours",     "hers",
      "ours",      "theirs",   "myself",   "yourself",  "himself",  "herself",   "itself",
      "ourselves", "yourselves", "themselves", "who",   "whom",     "someone",   "anyone",
      "everyone",  "nobody",   "somebody", "anybody",   "everybody", "something", "anything",
      "everything", "nothing"};
  return s;
}

// Base forms plus common irregular inflections. Regular inflections are
// recognized by de-suffixing in is_verb below.
inline const std::unordered_set<std::string>& verbs() {
  static const std::unordered_set<std::string> s = {
      "be",      "is",       "am",      "are",      "was",      "were",    "been",    "being",
      "do",      "does",     "did",     "done",     "have",     "has",     "had",     "having",
      "can",     "could",    "will",    "would",    "shall",    "should",  "may",     "might",
      "must",    "go",       "goes",    "went",     "gone",     "get",     "got",     "gotten",
      "make",    "made",     "know",    "knew",     "known",    "think",   "thought", "take",
      "took",    "taken",    "see",     "saw",      "seen",     "come",    "came",    "want",
      "look",    "use",      "find",    "found",    "give",     "gave",    "given",   "tell",
      "told",    "work",     "call",    "try",      "ask",      "need",    "feel",    "felt",
      "become",  "became",   "leave",   "left",     "put",      "mean",    "meant",   "keep",
      "kept",    "let",      "begin",   "began",    "begun",    "seem",    "help",    "talk",
      "turn",    "start",    "show",    "showed",   "shown",    "hear",    "heard",   "play",
      "run",     "ran",      "move",    "like",     "live",     "believe", "hold",    "held",
      "bring",   "brought",  "happen",  "write",    "wrote",    "written", "provide", "sit",
      "sat",     "stand",    "stood",   "lose",     "lost",     "pay",     "paid",    "meet",
      "met",     "include",  "continue", "set",     "learn",    "change",  "lead",    "led",
      "understand", "understood", "watch", "follow", "stop",    "create",  "speak",   "spoke",
      "spoken",  "read",     "allow",   "add",      "spend",    "spent",   "grow",    "grew",
      "grown",   "open",     "walk",    "win",      "won",      "offer",   "remember", "love",
      "consider", "appear",  "buy",     "bought",   "wait",     "serve",   "die",     "send",
      "sent",    "expect",   "build",   "built",    "stay",     "fall",    "fell",    "fallen",
      "cut",     "reach",    "remain",  "suggest",  "raise",    "pass",    "sell",    "sold",
      "require", "report",   "decide",  "pull",     "drive",    "drove",   "driven",  "eat",
      "ate",     "eaten",    "drink",   "drank",    "drunk",    "sleep",   "slept",   "rain",
      "snow",    "cost",     "teach",   "taught",   "catch",    "caught",  "forget",  "forgot",
      "fly",     "flew",     "flown",   "wear",     "wore",     "worn",    "break",   "broke",
      "broken",  "choose",   "chose",   "chosen",   "sing",     "sang",    "sung",    "swim",
      "swam",    "swum",     "ride",    "rode",     "ridden",   "rise",    "rose",    "risen",
      "throw",   "threw",    "thrown",  "visit",    "travel",   "study",   "listen",  "enjoy",
      "prefer",  "plan",     "hope",    "worry",    "miss",     "hate",    "mind",    "agree",
      "arrive",  "borrow",   "lend",    "lent",     "carry",    "clean",   "close",   "cook",
      "dance",   "finish",   "fix",     "invite",   "join",     "jump",    "laugh",   "order",
      "paint",   "practice", "rest",    "return",   "save",     "share",   "shop",    "smile",
      "spell",   "surprise", "thank",   "wash",     "wish",     "answer",  "attend",  "bake",
      "book",    "camp",     "check",   "climb",    "collect",  "cross",   "cry",     "deliver",
      "discuss", "dress",    "drop",    "earn",     "enter",    "exercise", "explain", "fill",
      "guess",   "hike",     "hurry",   "hurt",     "imagine",  "improve", "introduce", "land",
      "lift",    "matter",   "measure", "mention",  "notice",   "pack",    "park",    "pick",
      "point",   "prepare",  "print",   "promise",  "push",     "record",  "relax",   "repair",
      "repeat",  "ring",     "rang",    "rung",     "seat",     "sign",    "ski",     "smoke",
      "sound",   "taste",    "test",    "tie",      "touch",    "train",   "type",    "wake",
      "woke",    "warn",     "waste",   "welcome",  "wonder",   "recommend", "celebrate",
      "complain", "cancel",  "charge",  "compare",  "complete", "confirm", "connect", "contain",
      "count",   "cover",    "damage",  "deal",     "dealt",    "describe", "design",  "destroy",
      "develop", "disagree", "discover", "divide",  "dream",    "dry",     "examine", "exchange",
      "exist",   "fail",     "fit",     "fold",     "force",    "gather",  "graduate", "greet",
      "guard",   "handle",   "hang",    "hung",     "increase", "inform",  "injure",  "insist",
      "install", "intend",   "interview", "judge",  "knock",    "lack",    "last",    "lay",
      "laid",    "lie",      "lain",    "lied",     "lock",     "manage",  "marry",   "melt",
      "mix",     "obtain",   "occur",   "operate",  "organize", "owe",     "own",     "perform",
      "persuade", "plant",   "pour",    "predict",  "pretend",  "prevent", "produce", "protect",
      "prove",   "publish",  "realize", "receive",  "reduce",   "refuse",  "regret",  "remove",
      "rent",    "reply",    "request", "respond",  "retire",   "review",  "search",  "select",
      "shake",   "shook",    "shaken",  "shine",    "shout",    "shut",    "slip",    "solve",
      "sort",    "steal",    "stole",   "stolen",   "stick",    "stuck",   "succeed", "suffer",
      "supply",  "support",  "suppose", "tend",     "translate", "treat",  "trust",   "vote",
      "recognize", "avoid",  "bite",    "bit",      "bitten",   "blow",    "blew",    "blown",
      "burn",    "burnt",    "beat",    "beaten",   "bend",     "bent",    "dig",     "dug",
      "draw",    "drew",     "drawn",   "feed",     "fed",      "fight",   "fought",  "freeze",
      "froze",   "frozen",   "hide",    "hid",      "hidden",   "hit",     "kill",    "kick",
      "quit",    "say",      "says",    "said",     "seek",     "sought",  "shoot",   "shot",
      "smell",   "spread",   "stretch", "strike",   "struck",   "swear",   "swore",   "sworn",
      "sweep",   "swept",    "tear",    "tore",     "torn",     "wind",    "wound",   "worked",
      "drives",  "driving"};
  return s;
}

}  // namespace lexicon

// True when the token is a lexicon verb, directly or after undoing a regular
// -s / -es / -ed / -ing inflection.
inline bool is_verb(const std::string& token) {
  const auto& verbs = lexicon::verbs();
  if (verbs.count(token)) return true;
  const auto n = token.size();
  auto base_is = [&](std::size_t strip, const char* append = "") {
    return verbs.count(token.substr(0, n - strip) + append) != 0;
  };
  if (n > 4 && token.compare(n - 3, 3, "ing") == 0) {
    if (base_is(3) || base_is(3, "e")) return true;
    // doubled final consonant: stopping -> stop
    if (token[n - 4] == token[n - 5] && base_is(4)) return true;
  }
  if (n > 3 && token.compare(n - 3, 3, "ies") == 0 && base_is(3, "y")) return true;
  if (n > 3 && token.compare(n - 3, 3, "ied") == 0 && base_is(3, "y")) return true;
  if (n > 2 && token.compare(n - 2, 2, "es") == 0 && base_is(2)) return true;
  if (n > 2 && token.compare(n - 2, 2, "ed") == 0) {
    if (base_is(2) || base_is(1)) return true;
    if (n > 4 && token[n - 3] == token[n - 4] && base_is(3)) return true;
  }
  if (n > 1 && token.back() == 's' && base_is(1)) return true;
  return false;
}

// Lexicon tag for a word, or nothing for open-class words we cannot judge.
inline std::optional<std::string> pos_tag(const std::string& token) {
  if (is_verb(token)) return "v";
  if (lexicon::determiners().count(token)) return "det";
  if (lexicon::prepositions().count(token)) return "prep";
  if (lexicon::pronouns().count(token)) return "pron";
  return std::nullopt;
}

inline bool is_stopword(const std::string& token) {
  return lexicon::determiners().count(token) || lexicon::prepositions().count(token) ||
         lexicon::pronouns().count(token) ||
         (token.size() == 1 && !std::isalnum(static_cast<unsigned char>(token[0])));
}

}  // namespace ocn
