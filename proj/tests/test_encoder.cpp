#include <gtest/gtest.h>

#include "ocn/encoder.hpp"
#include "ocn/gradcheck.hpp"

using namespace ocn;

namespace {

EncoderConfig small_cfg() {
  EncoderConfig cfg;
  cfg.d = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.lstm_hidden = 3;
  cfg.max_seq_len = 24;
  return cfg;
}

ParamStore make_params(const EncoderConfig& cfg, int vocab_size, std::uint64_t seed) {
  ParamStore store;
  Rng rng(seed);
  build_encoder_params(store, cfg, vocab_size, rng);
  return store;
}

TokenSequence simple_seq(int n_total, int d_end, int q_end) {
  TokenSequence seq;
  for (int i = 0; i < n_total; ++i) seq.ids.push_back(17 + (i % 3));
  seq.mask.assign(n_total, 1);
  seq.dialogue_end = d_end;
  seq.question_end = q_end;
  return seq;
}

}  // namespace

TEST(TokenSequence, AssemblySegmentArithmetic) {
  // 5 dialogue tokens + sep, 2 question tokens, sep, 3 option tokens
  TokenSequence seq = build_token_sequence({20, 21, 22, 23, 24}, {30, 31}, {40, 41, 42}, 32);
  EXPECT_EQ(seq.length(), 12);
  EXPECT_EQ(seq.dialogue_end, 6);           // dialogue plus its separator
  EXPECT_EQ(seq.question_end, 8);
  EXPECT_EQ(seq.ids[5], kSepId);
  EXPECT_EQ(seq.ids[8], kSepId);
  const int n_d = seq.dialogue_end;
  const int n_o = seq.length() - seq.dialogue_end;
  EXPECT_EQ(n_d + n_o, seq.length());
}

TEST(TokenSequence, NoDialogueMeansNoLeadingSep) {
  TokenSequence seq = build_token_sequence({}, {30, 31}, {40}, 32);
  EXPECT_EQ(seq.dialogue_end, 0);
  EXPECT_EQ(seq.question_end, 2);
  EXPECT_EQ(seq.length(), 4);  // q q sep o
  EXPECT_EQ(seq.ids[2], kSepId);
}

TEST(TokenSequence, TruncationDropsOldestDialogueFirst) {
  std::vector<int> d(10, 20), q = {30, 31}, o = {40, 41};
  d[0] = 99;  // oldest token, must be dropped first
  TokenSequence seq = build_token_sequence(d, q, o, 12);
  EXPECT_EQ(seq.length(), 12);
  for (int id : seq.ids) EXPECT_NE(id, 99);
  // question and option tokens untouched
  EXPECT_EQ(seq.ids[seq.dialogue_end], 30);
  EXPECT_EQ(seq.ids.back(), 41);
  // dialogue exhausted before options are touched
  TokenSequence tight = build_token_sequence(d, q, {40, 41, 42, 43}, 8);
  EXPECT_EQ(tight.dialogue_end, 1);  // only the separator remains of the dialogue
  EXPECT_EQ(tight.question_end, 3);
}

TEST(TokenSequence, OptionPaddingIsMaskedOut) {
  TokenSequence seq = build_token_sequence({20}, {30}, {40}, 32, 5);
  EXPECT_EQ(seq.length(), 4 + 1 + 4);  // d sep q sep o + 4 pads
  for (int i = 0; i < seq.length(); ++i)
    EXPECT_EQ(seq.mask[i], seq.ids[i] == kPadId ? 0 : 1);
}

TEST(Encoder, SegmentRowSplit) {
  EncoderConfig cfg = small_cfg();
  cfg.layers = 0;
  ParamStore store = make_params(cfg, 24, 1);
  TokenSequence seq = simple_seq(10, 6, 8);
  OptionEncoding enc = split_encoded(encode_sequence(seq, store, cfg), seq);
  EXPECT_EQ(enc.d_enc.rows(), 6);
  EXPECT_EQ(enc.o_enc.rows(), 4);
  EXPECT_EQ(enc.d_enc.rows() + enc.o_enc.rows(), enc.t_enc.rows());
  EXPECT_EQ(enc.t_enc.cols(), cfg.d);
}

TEST(Encoder, ZeroLayerEqualsEmbeddingPlusPositions) {
  EncoderConfig cfg = small_cfg();
  cfg.layers = 0;
  ParamStore store = make_params(cfg, 24, 2);
  TokenSequence seq = simple_seq(5, 2, 3);
  Tensor t = encode_sequence(seq, store, cfg);
  const Tensor& emb = store.get("enc.tok_embed");
  const Tensor& pos = store.get("enc.pos_embed");
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < cfg.d; ++j)
      EXPECT_DOUBLE_EQ(t.at(i, j), emb.at(seq.ids[i], j) + pos.at(i, j));
}

TEST(Encoder, PadContentCannotLeakIntoRealRows) {
  EncoderConfig cfg = small_cfg();
  ParamStore store = make_params(cfg, 24, 3);
  TokenSequence seq = build_token_sequence({20, 21}, {18}, {19}, 24, 6);
  ASSERT_EQ(seq.mask.back(), 0);
  Tensor base = encode_sequence(seq, store, cfg);
  TokenSequence altered = seq;
  for (int i = 0; i < altered.length(); ++i)
    if (!altered.mask[i]) altered.ids[i] = 22;  // arbitrary junk under the mask
  Tensor perturbed = encode_sequence(altered, store, cfg);
  for (int i = 0; i < seq.length(); ++i) {
    if (!seq.mask[i]) continue;
    for (int j = 0; j < cfg.d; ++j) EXPECT_DOUBLE_EQ(base.at(i, j), perturbed.at(i, j));
  }
}

TEST(Encoder, QEncIsBitwiseSubBlockOfOEnc) {
  EncoderConfig cfg = small_cfg();
  ParamStore store = make_params(cfg, 24, 4);
  TokenSequence seq = simple_seq(12, 5, 9);
  OptionEncoding enc = split_encoded(encode_sequence(seq, store, cfg), seq);
  const int n_q = enc.q_enc.rows();
  for (int i = 0; i < n_q; ++i)
    for (int j = 0; j < cfg.d; ++j) EXPECT_EQ(enc.q_enc.at(i, j), enc.o_enc.at(i, j));
}

TEST(Encoder, DeterministicForFixedParams) {
  EncoderConfig cfg = small_cfg();
  ParamStore store = make_params(cfg, 24, 5);
  TokenSequence seq = simple_seq(7, 3, 5);
  Tensor a = encode_sequence(seq, store, cfg);
  Tensor b = encode_sequence(seq, store, cfg);
  EXPECT_EQ(a.values(), b.values());
}

TEST(Encoder, OverLengthSequenceRejected) {
  EncoderConfig cfg = small_cfg();
  ParamStore store = make_params(cfg, 24, 6);
  TokenSequence seq = simple_seq(cfg.max_seq_len + 1, 3, 5);
  EXPECT_THROW(encode_sequence(seq, store, cfg), std::invalid_argument);
}

TEST(Encoder, GradCheckThroughTransformerLayer) {
  EncoderConfig cfg = small_cfg();
  ParamStore store = make_params(cfg, 20, 7);
  TokenSequence seq = build_token_sequence({17, 18}, {19}, {17}, 24, 3);
  std::vector<Tensor> leaves;
  for (auto& p : store.all())
    if (p.name.rfind("enc.klstm", 0) != 0) leaves.push_back(p.tensor);
  const double err = grad_check(
      [&] { return sum_all(tanh(encode_sequence(seq, store, cfg))); }, leaves, 1e-5);
  EXPECT_LT(err, 1e-4);
}

TEST(BiLstm, OutputShapeIsAlways1x2l) {
  EncoderConfig cfg = small_cfg();
  ParamStore store = make_params(cfg, 24, 8);
  for (int len : {1, 2, 5, 11}) {
    std::vector<int> ids(len, 18);
    Tensor h = encode_pseudo_sentence(ids, store, cfg);
    EXPECT_EQ(h.rows(), 1);
    EXPECT_EQ(h.cols(), 2 * cfg.lstm_hidden);
  }
  EXPECT_THROW(encode_pseudo_sentence({}, store, cfg), std::invalid_argument);
}

TEST(BiLstm, ZeroWeightsGiveZeroOutput) {
  EncoderConfig cfg = small_cfg();
  ParamStore store = make_params(cfg, 24, 9);
  for (auto& p : store.all())
    if (p.name.rfind("enc.klstm", 0) == 0)
      std::fill(p.tensor.values().begin(), p.tensor.values().end(), 0.0);
  Tensor h = encode_pseudo_sentence({17, 18, 19}, store, cfg);
  for (double v : h.values()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(BiLstm, GradCheck) {
  EncoderConfig cfg = small_cfg();
  ParamStore store = make_params(cfg, 20, 10);
  const std::vector<int> ids = {17, 18, 19, 17};
  std::vector<Tensor> leaves;
  for (auto& p : store.all())
    if (p.name.rfind("enc.klstm", 0) == 0 || p.name == "enc.tok_embed")
      leaves.push_back(p.tensor);
  const double err = grad_check(
      [&] { return sum_all(tanh(encode_pseudo_sentence(ids, store, cfg))); }, leaves, 1e-5);
  EXPECT_LT(err, 1e-4);
}

TEST(KnowledgeMatrix, RowPerTripleInInputOrder) {
  EncoderConfig cfg = small_cfg();
  ParamStore store = make_params(cfg, 24, 11);
  const std::vector<std::vector<int>> sentences = {{17, 18}, {19}, {18, 19, 17}};
  Tensor null_row = Tensor::uniform(1, 2 * cfg.lstm_hidden, *(new Rng(0)), -1, 1);
  Tensor m = build_knowledge_matrix(sentences, store, cfg, null_row);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), 2 * cfg.lstm_hidden);
  for (int i = 0; i < 3; ++i) {
    Tensor row = encode_pseudo_sentence(sentences[i], store, cfg);
    for (int j = 0; j < m.cols(); ++j) EXPECT_DOUBLE_EQ(m.at(i, j), row.at(0, j));
  }
}

TEST(KnowledgeMatrix, EmptyListYieldsNullRow) {
  EncoderConfig cfg = small_cfg();
  ParamStore store = make_params(cfg, 24, 12);
  Rng rng(13);
  Tensor null_row = Tensor::uniform(1, 2 * cfg.lstm_hidden, rng, -1, 1);
  Tensor m = build_knowledge_matrix({}, store, cfg, null_row);
  EXPECT_EQ(m.rows(), 1);
  EXPECT_EQ(m.values(), null_row.values());
}

TEST(EncoderConfig, Validation) {
  EncoderConfig cfg = small_cfg();
  cfg.heads = 3;  // 8 % 3 != 0
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_cfg();
  cfg.d = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
