#include <gtest/gtest.h>

#include <filesystem>

#include "ocn/gradcheck.hpp"
#include "ocn/inject.hpp"
#include "ocn/triples.hpp"

using namespace ocn;

namespace {

KnowledgeTriple cn(const std::string& h, const std::string& r, const std::string& t,
                   double w = 1.0) {
  KnowledgeTriple kt;
  kt.head = h;
  kt.relation = r;
  kt.tail = t;
  kt.source = KbSource::ConceptNet;
  kt.weight = w;
  return kt;
}

KnowledgeTriple at(const std::string& h, const std::string& r, const std::string& t,
                   const std::string& speaker = "") {
  KnowledgeTriple kt;
  kt.head = h;
  kt.relation = r;
  kt.tail = t;
  kt.source = KbSource::Atomic;
  kt.speaker = speaker;
  return kt;
}

ParamStore inject_store(const EncoderConfig& cfg, std::uint64_t seed) {
  ParamStore store;
  Rng rng(seed);
  build_injection_params(store, cfg, rng);
  return store;
}

}  // namespace

TEST(CnPseudo, PaperFixtureByteExact) {
  EXPECT_EQ(cn_triple_to_pseudo(cn("book", "AtLocation", "library")).text(),
            "book at location library");
}

TEST(CnPseudo, CamelCaseRule) {
  EXPECT_EQ(cn_triple_to_pseudo(cn("bank", "RelatedTo", "security")).text(),
            "bank related to security");
}

TEST(CnPseudo, HeadEqualsTailDegenerate) {
  EXPECT_EQ(cn_triple_to_pseudo(cn("cat", "IsA", "cat")).text(), "cat is a cat");
}

TEST(CnPseudo, UnknownRelationRejectedWithName) {
  try {
    cn_triple_to_pseudo(cn("a", "MadeUpRelation", "b"));
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("MadeUpRelation"), std::string::npos);
  }
  EXPECT_THROW(cn_triple_to_pseudo(at("a", "xReact", "b")), std::invalid_argument);
}

TEST(CnPseudo, InvertibleGivenTokenCounts) {
  // reconstructing head/relation/tail from the token stream and the
  // head/tail token counts recovers the original triple
  const std::vector<KnowledgeTriple> triples = {
      cn("revolving door", "AtLocation", "new york"), cn("dinner", "AtLocation", "restaurant"),
      cn("bank", "RelatedTo", "security"), cn("drink water", "MotivatedByGoal", "thirst")};
  for (const auto& t : triples) {
    PseudoSentence ps = cn_triple_to_pseudo(t);
    const auto head_toks = tokenize(t.head);
    const auto tail_toks = tokenize(t.tail);
    const std::size_t rel_len = ps.tokens.size() - head_toks.size() - tail_toks.size();
    std::string rel;
    for (std::size_t i = 0; i < rel_len; ++i) {
      std::string w = ps.tokens[head_toks.size() + i];
      w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      rel += w;
    }
    EXPECT_EQ(rel, t.relation);
    EXPECT_EQ(std::vector<std::string>(ps.tokens.begin(), ps.tokens.begin() + head_toks.size()),
              head_toks);
    EXPECT_EQ(std::vector<std::string>(ps.tokens.end() - tail_toks.size(), ps.tokens.end()),
              tail_toks);
  }
}

TEST(AtomicPseudo, PaperFixtureByteExact) {
  EXPECT_EQ(atomic_triple_to_pseudo(at("the road is not bad", "xReact", "happy", "W")).text(),
            "W react happy");
}

TEST(AtomicPseudo, OptionDerivedUsesBlank) {
  EXPECT_EQ(atomic_triple_to_pseudo(at("option text", "oEffect", "get tired")).text(),
            "[blank] others effect get tired");
}

TEST(AtomicPseudo, IntentOrdering) {
  PseudoSentence ps = atomic_triple_to_pseudo(at("s", "xIntent", "t", "M"));
  ASSERT_GE(ps.tokens.size(), 2u);
  EXPECT_EQ(ps.tokens[0], "M");
  EXPECT_EQ(ps.tokens[1], "intent");
}

TEST(AtomicPseudo, AllNineRelationsMapAndOthersRejected) {
  const std::vector<std::pair<std::string, std::string>> expect = {
      {"xIntent", "intent"},        {"xNeed", "need"},   {"xAttr", "attribute"},
      {"xEffect", "effect"},        {"xReact", "react"}, {"xWant", "want"},
      {"oEffect", "others effect"}, {"oReact", "others react"}, {"oWant", "others want"}};
  for (const auto& [rel, words] : expect)
    EXPECT_EQ(atomic_triple_to_pseudo(at("h", rel, "tail")).text(), "[blank] " + words + " tail");
  EXPECT_THROW(atomic_triple_to_pseudo(at("h", "xViolate", "t")), std::invalid_argument);
  EXPECT_THROW(atomic_triple_to_pseudo(cn("h", "IsA", "t")), std::invalid_argument);
}

TEST(AtomicPseudo, SpecialTokenRendering) {
  PseudoSentence ps =
      atomic_triple_to_pseudo(at("x", "xReact", "happy", "W"), RelationRendering::SpecialToken);
  EXPECT_EQ(ps.text(), "W [xreact] happy");
  Vocabulary v;
  EXPECT_EQ(v.lookup("[xreact]"), 12);  // reserved id, never unk
}

TEST(Pseudo, ExpandedRenderingHasNoCamelCaseTokens) {
  for (const auto& rel : conceptnet_relations()) {
    PseudoSentence ps = cn_triple_to_pseudo(cn("head", rel, "tail"));
    for (const auto& tok : ps.tokens)
      for (char c : tok) EXPECT_FALSE(std::isupper(static_cast<unsigned char>(c)))
          << rel << " -> " << ps.text();
  }
}

TEST(CapTriples, DescendingWeightWithLexicographicTies) {
  std::vector<KnowledgeTriple> ts = {cn("b", "IsA", "x", 1.0), cn("a", "IsA", "x", 1.0),
                                     cn("c", "IsA", "x", 3.0), cn("d", "IsA", "x", 2.0)};
  auto capped = cap_triples(ts, 3);
  ASSERT_EQ(capped.size(), 3u);
  EXPECT_EQ(capped[0].head, "c");
  EXPECT_EQ(capped[1].head, "d");
  EXPECT_EQ(capped[2].head, "a");  // ties by pseudo-sentence text
}

TEST(TriplesJsonl, RoundTrip) {
  std::vector<TripleGroup> groups;
  groups.push_back({"q1", "context", {at("the road is not bad", "xReact", "happy", "W")}});
  groups.push_back({"q1", "0", {cn("revolving door", "AtLocation", "bank", 2.5)}});
  const auto path = (std::filesystem::temp_directory_path() / "ocn_triples_test.jsonl").string();
  write_triples_jsonl(groups, path);
  auto loaded = load_triples_jsonl(path);
  ASSERT_TRUE(loaded.count("q1"));
  EXPECT_EQ(loaded["q1"].context.size(), 1u);
  EXPECT_EQ(loaded["q1"].context[0].speaker, "W");
  ASSERT_TRUE(loaded["q1"].per_option.count(0));
  EXPECT_EQ(loaded["q1"].per_option[0][0], cn("revolving door", "AtLocation", "bank"));
  EXPECT_DOUBLE_EQ(loaded["q1"].per_option[0][0].weight, 2.5);
  std::filesystem::remove(path);

  write_file_atomic(path, "{not json\n");
  try {
    load_triples_jsonl(path);
    FAIL() << "expected parse error with line number";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(Inject, OutputShapeAlwaysNxD) {
  EncoderConfig cfg;
  cfg.d = 8;
  cfg.lstm_hidden = 3;
  ParamStore store = inject_store(cfg, 1);
  Rng rng(2);
  for (int n : {1, 4, 9}) {
    for (int m : {1, 3, 7}) {
      Tensor t = Tensor::uniform(n, cfg.d, rng, -1, 1);
      Tensor h = Tensor::uniform(m, 2 * cfg.lstm_hidden, rng, -1, 1);
      Tensor out = inject(t, h, store);
      EXPECT_EQ(out.rows(), n);
      EXPECT_EQ(out.cols(), cfg.d);
      for (double v : out.values()) EXPECT_GE(v, 0.0);  // relu output
    }
  }
  Tensor t = Tensor::uniform(3, cfg.d, rng, -1, 1);
  EXPECT_THROW(inject(t, Tensor::uniform(2, 5, rng, -1, 1), store), std::invalid_argument);
  EXPECT_THROW(inject(Tensor::uniform(3, 5, rng, -1, 1),
                      Tensor::uniform(2, 2 * cfg.lstm_hidden, rng, -1, 1), store),
               std::invalid_argument);
}

TEST(Inject, SingleKnowledgeRowBroadcasts) {
  // with m=1 the text-to-knowledge weights are an all-ones column, so A_m is
  // the projected knowledge row at every position; a w_a that passes the A_m
  // block through makes that directly observable
  EncoderConfig cfg;
  cfg.d = 4;
  cfg.lstm_hidden = 2;
  ParamStore store = inject_store(cfg, 3);
  Tensor w_a = store.get("inj.w_a");
  std::fill(w_a.values().begin(), w_a.values().end(), 0.0);
  for (int j = 0; j < cfg.d; ++j) w_a.at(cfg.d + j, j) = 1.0;
  Rng rng(4);
  Tensor t = Tensor::uniform(5, cfg.d, rng, -1, 1);
  Tensor h = Tensor::uniform(1, 2 * cfg.lstm_hidden, rng, -1, 1);
  Tensor expected = relu(matmul(h, store.get("inj.w_proj")));
  Tensor out = inject(t, h, store);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < cfg.d; ++j) EXPECT_NEAR(out.at(i, j), expected.at(0, j), 1e-12);
}

TEST(Inject, PermutingKnowledgeRowsLeavesOutputUnchanged) {
  EncoderConfig cfg;
  cfg.d = 8;
  cfg.lstm_hidden = 3;
  ParamStore store = inject_store(cfg, 5);
  Rng rng(6);
  Tensor t = Tensor::uniform(4, cfg.d, rng, -1, 1);
  Tensor h = Tensor::uniform(3, 2 * cfg.lstm_hidden, rng, -1, 1);
  Tensor h_perm(3, h.cols());
  const int perm[3] = {2, 0, 1};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < h.cols(); ++j) h_perm.at(i, j) = h.at(perm[i], j);
  Tensor a = inject(t, h, store);
  Tensor b = inject(t, h_perm, store);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-12);
}

TEST(Inject, GradCheck) {
  EncoderConfig cfg;
  cfg.d = 8;
  cfg.lstm_hidden = 3;
  ParamStore store = inject_store(cfg, 7);
  Rng rng(8);
  Tensor t = Tensor::uniform(5, cfg.d, rng, -0.5, 0.5);
  t.set_requires_grad(true);
  Tensor h = Tensor::uniform(3, 2 * cfg.lstm_hidden, rng, -0.5, 0.5);
  h.set_requires_grad(true);
  std::vector<Tensor> leaves = {t, h};
  for (auto& p : store.all()) leaves.push_back(p.tensor);
  const double err =
      grad_check([&] { return sum_all(tanh(inject(t, h, store))); }, leaves, 1e-5);
  EXPECT_LT(err, 1e-4);
}

TEST(Inject, MaskedTextRowsGetNoAttention) {
  EncoderConfig cfg;
  cfg.d = 6;
  cfg.lstm_hidden = 2;
  ParamStore store = inject_store(cfg, 9);
  Rng rng(10);
  Tensor t = Tensor::uniform(4, cfg.d, rng, -1, 1);
  Tensor h = Tensor::uniform(2, 2 * cfg.lstm_hidden, rng, -1, 1);
  const std::vector<std::uint8_t> mask = {1, 1, 1, 0};
  Tensor base = inject(t, h, store, mask);
  Tensor altered = t;
  Tensor t2 = Tensor::from_values(4, cfg.d, t.values());
  for (int j = 0; j < cfg.d; ++j) t2.at(3, j) = 42.0;  // junk in the dead row
  Tensor out = inject(t2, h, store, mask);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < cfg.d; ++j) EXPECT_DOUBLE_EQ(base.at(i, j), out.at(i, j));
}
