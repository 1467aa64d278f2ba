#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "ocn/gradcheck.hpp"
#include "ocn/pretrain.hpp"
#include "ocn/triples.hpp"

using namespace ocn;

namespace {

EncoderConfig tiny_enc() {
  EncoderConfig cfg;
  cfg.d = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.lstm_hidden = 3;
  cfg.max_seq_len = 16;
  return cfg;
}

ParamStore enc_store(const EncoderConfig& cfg, int vocab, std::uint64_t seed) {
  ParamStore store;
  Rng rng(seed);
  build_encoder_params(store, cfg, vocab, rng);
  return store;
}

}  // namespace

TEST(MaskTokens, RoundingRule) {
  PretrainConfig cfg;
  cfg.mask_rate = 0.15;
  std::vector<int> seq(20, 20);  // 20 maskable tokens
  Rng rng(1);
  auto ex = mask_tokens(seq, cfg, rng);
  ASSERT_TRUE(ex.has_value());
  EXPECT_EQ(ex->positions.size(), 3u);  // round(0.15 * 20) = 3
  for (std::size_t i = 0; i < ex->positions.size(); ++i) {
    EXPECT_EQ(ex->input_ids[ex->positions[i]], kMaskId);
    EXPECT_EQ(ex->target_ids[i], 20);
  }
}

TEST(MaskTokens, ZeroRateMasksNothing) {
  PretrainConfig cfg;
  cfg.mask_rate = 0.0;
  std::vector<int> seq(10, 20);
  Rng rng(2);
  auto ex = mask_tokens(seq, cfg, rng);
  ASSERT_TRUE(ex.has_value());
  EXPECT_TRUE(ex->positions.empty());
  EXPECT_EQ(ex->input_ids, seq);
}

TEST(MaskTokens, MinimumOneWhenAnyMaskable) {
  PretrainConfig cfg;
  cfg.mask_rate = 0.05;
  std::vector<int> seq = {kSepId, 20, kSepId};  // one maskable token
  Rng rng(3);
  auto ex = mask_tokens(seq, cfg, rng);
  ASSERT_TRUE(ex.has_value());
  EXPECT_EQ(ex->positions.size(), 1u);
  EXPECT_EQ(ex->positions[0], 1);
}

TEST(MaskTokens, ReservedTokensNeverMasked) {
  PretrainConfig cfg;
  cfg.mask_rate = 0.9;
  std::vector<int> seq = {kSpeakerWId, 12 /*[xreact]*/, 20, 21, kPadId, kSepId};
  for (std::uint64_t s = 0; s < 30; ++s) {
    Rng rng(s);
    auto ex = mask_tokens(seq, cfg, rng);
    ASSERT_TRUE(ex.has_value());
    for (int pos : ex->positions) EXPECT_TRUE(pos == 2 || pos == 3);
  }
}

TEST(MaskTokens, TailOnlyRestrictsToAfterRelationToken) {
  PretrainConfig cfg;
  cfg.mask_rate = 0.9;
  cfg.tail_only = true;
  // "W [xreact] happy" with vocabulary ids: W=5, [xreact]=12, happy=20
  const std::vector<int> seq = {kSpeakerWId, 12, 20};
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    auto ex = mask_tokens(seq, cfg, rng);
    ASSERT_TRUE(ex.has_value());
    ASSERT_EQ(ex->positions.size(), 1u);
    EXPECT_EQ(ex->positions[0], 2);  // only the tail token is a candidate
  }
  // no relation token present: record skipped
  Rng rng(9);
  EXPECT_FALSE(mask_tokens({kSpeakerWId, 20, 21}, cfg, rng).has_value());
}

TEST(MaskTokens, DeterministicForFixedSeed) {
  PretrainConfig cfg;
  std::vector<int> seq(30, 20);
  Rng a(7), b(7);
  auto x = mask_tokens(seq, cfg, a);
  auto y = mask_tokens(seq, cfg, b);
  EXPECT_EQ(x->positions, y->positions);
}

TEST(MlmStep, UniformLogitsGiveLogVocabLoss) {
  EncoderConfig cfg = tiny_enc();
  const int vocab = 50;
  ParamStore store = enc_store(cfg, vocab, 4);
  // zero embeddings make every logit identical, so the masked-token loss is
  // exactly ln(vocab)
  Tensor embed = store.get("enc.tok_embed");
  std::fill(embed.values().begin(), embed.values().end(), 0.0);
  MaskedExample ex;
  ex.input_ids = {kMaskId, 20, 21};
  ex.positions = {0};
  ex.target_ids = {22};
  Tensor loss = mlm_step({ex}, store, cfg);
  EXPECT_NEAR(loss.item(), std::log(static_cast<double>(vocab)), 1e-9);
}

TEST(MlmStep, LossIsMeanOverMaskedPositionsOnly) {
  EncoderConfig cfg = tiny_enc();
  ParamStore store = enc_store(cfg, 30, 5);
  MaskedExample one;
  one.input_ids = {kMaskId, 20, 21, 22};
  one.positions = {0};
  one.target_ids = {23};
  MaskedExample two;
  two.input_ids = {kMaskId, 20, kMaskId, 22};
  two.positions = {0, 2};
  two.target_ids = {23, 24};
  // single-position losses
  const double l1 = mlm_step({one}, store, cfg).item();
  MaskedExample two_a = two, two_b = two;
  two_a.positions = {0};
  two_a.target_ids = {23};
  two_b.positions = {2};
  two_b.target_ids = {24};
  const double l2a = mlm_step({two_a}, store, cfg).item();
  const double l2b = mlm_step({two_b}, store, cfg).item();
  const double batch = mlm_step({one, two}, store, cfg).item();
  EXPECT_NEAR(batch, (l1 + l2a + l2b) / 3.0, 1e-9);
}

TEST(MlmStep, GradCheck) {
  EncoderConfig cfg = tiny_enc();
  cfg.layers = 1;
  ParamStore store = enc_store(cfg, 26, 6);
  MaskedExample ex;
  ex.input_ids = {kMaskId, 20, 21};
  ex.positions = {0};
  ex.target_ids = {22};
  std::vector<Tensor> leaves;
  for (auto& p : store.all())
    if (p.name.rfind("enc.klstm", 0) != 0) leaves.push_back(p.tensor);
  const double err = grad_check([&] { return mlm_step({ex}, store, cfg); }, leaves, 1e-5);
  EXPECT_LT(err, 1e-4);
}

TEST(Pretrain, OverfitsSingleSentence) {
  EncoderConfig enc = tiny_enc();
  const std::vector<std::vector<std::string>> corpus_tokens = {
      tokenize("the cat sat on the mat")};
  Vocabulary v;
  grow_vocabulary(v, corpus_tokens);
  auto ids = corpus_to_ids(corpus_tokens, v, enc.max_seq_len);
  ParamStore store = enc_store(enc, v.size(), 7);
  PretrainConfig cfg;
  cfg.mask_rate = 0.2;
  cfg.batch_size = 1;
  cfg.epochs = 150;
  cfg.learning_rate = 3e-3;
  cfg.seed = 11;
  pretrain_mlm(store, enc, cfg, ids, {});
  // masked-token recovery after overfitting: every maskable position must be
  // predicted back exactly
  int correct = 0, total = 0;
  for (std::size_t pos = 0; pos < ids[0].size(); ++pos) {
    if (Vocabulary::is_reserved(ids[0][pos])) continue;
    MaskedExample ex;
    ex.input_ids = ids[0];
    ex.input_ids[pos] = kMaskId;
    TokenSequence seq;
    seq.ids = ex.input_ids;
    seq.mask.assign(ex.input_ids.size(), 1);
    Tensor logits = matmul(encode_sequence(seq, store, enc), transpose(store.get("enc.tok_embed")));
    int best = 0;
    for (int jj = 1; jj < logits.cols(); ++jj)
      if (logits.at(static_cast<int>(pos), jj) > logits.at(static_cast<int>(pos), best)) best = jj;
    correct += best == ids[0][pos] ? 1 : 0;
    ++total;
  }
  EXPECT_EQ(correct, total);
}

TEST(Pretrain, TailOnlyRunCountsZeroViolations) {
  EncoderConfig enc = tiny_enc();
  Vocabulary v;
  std::vector<std::vector<std::string>> corpus;
  for (const auto& tail : {"happy", "tired", "nice", "sad"}) {
    KnowledgeTriple t;
    t.head = "x";
    t.relation = "xReact";
    t.tail = tail;
    t.source = KbSource::Atomic;
    t.speaker = "W";
    corpus.push_back(atomic_triple_to_pseudo(t, RelationRendering::SpecialToken).tokens);
  }
  grow_vocabulary(v, corpus);
  auto ids = corpus_to_ids(corpus, v, enc.max_seq_len);
  ParamStore store = enc_store(enc, v.size(), 8);
  PretrainConfig cfg;
  cfg.tail_only = true;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.seed = 3;
  auto stats = pretrain_mlm(store, enc, cfg, ids, ids);
  EXPECT_GT(stats.masked_positions, 0);
  EXPECT_EQ(stats.non_tail_masked, 0);
}

TEST(Pretrain, SeedReproducibility) {
  EncoderConfig enc = tiny_enc();
  Vocabulary v;
  std::vector<std::vector<std::string>> corpus = {
      tokenize("a dog runs fast"), tokenize("a cat sleeps all day"),
      tokenize("the sun is bright"), tokenize("water flows down the river")};
  grow_vocabulary(v, corpus);
  auto ids = corpus_to_ids(corpus, v, enc.max_seq_len);
  PretrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.seed = 42;
  ParamStore s1 = enc_store(enc, v.size(), 9);
  ParamStore s2 = enc_store(enc, v.size(), 9);
  auto r1 = pretrain_mlm(s1, enc, cfg, ids, ids);
  auto r2 = pretrain_mlm(s2, enc, cfg, ids, ids);
  EXPECT_EQ(r1.epoch_train_loss, r2.epoch_train_loss);
  EXPECT_EQ(r1.epoch_heldout_loss, r2.epoch_heldout_loss);
  for (std::size_t i = 0; i < s1.all().size(); ++i)
    EXPECT_EQ(s1.all()[i].tensor.values(), s2.all()[i].tensor.values());
}

TEST(ExportImport, RoundTripIsBitwise) {
  EncoderConfig enc = tiny_enc();
  Vocabulary v;
  v.add("cat");
  ParamStore store = enc_store(enc, v.size(), 10);
  const auto path = (std::filesystem::temp_directory_path() / "ocn_enc_ckpt.bin").string();
  export_encoder(store, v, path);
  ParamStore fresh = enc_store(enc, v.size(), 999);  // different init
  ImportInfo info = import_encoder(fresh, path);
  EXPECT_EQ(info.path, path);
  EXPECT_EQ(info.hash.size(), 16u);
  for (std::size_t i = 0; i < store.all().size(); ++i)
    EXPECT_EQ(fresh.all()[i].tensor.values(), store.all()[i].tensor.values());
  Vocabulary loaded = load_exported_vocab(path);
  EXPECT_EQ(loaded.lookup("cat"), v.lookup("cat"));
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".vocab");
}

TEST(ExportImport, MismatchedHiddenSizeRejected) {
  EncoderConfig enc8 = tiny_enc();
  Vocabulary v;
  ParamStore small = enc_store(enc8, v.size(), 11);
  const auto path = (std::filesystem::temp_directory_path() / "ocn_enc_d8.bin").string();
  export_encoder(small, v, path);
  EncoderConfig enc16 = tiny_enc();
  enc16.d = 16;
  ParamStore big = enc_store(enc16, v.size(), 12);
  EXPECT_THROW(import_encoder(big, path), std::runtime_error);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".vocab");
}
