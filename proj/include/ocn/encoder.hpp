#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocn/params.hpp"
#include "ocn/rng.hpp"
#include "ocn/tensor.hpp"
#include "ocn/text.hpp"

namespace ocn {

struct EncoderConfig {
  int d = 64;            // hidden size
  int layers = 2;        // self-attention layers
  int heads = 4;
  int lstm_hidden = 32;  // l, per direction of the knowledge BiLSTM
  int max_seq_len = 128;
  double dropout = 0.0;

  void validate() const {
    if (d <= 0 || layers < 0 || heads <= 0 || lstm_hidden <= 0 || max_seq_len <= 0)
      throw std::invalid_argument("EncoderConfig: sizes must be positive");
    if (d % heads != 0)
      throw std::invalid_argument("EncoderConfig: d=" + std::to_string(d) +
                                  " not divisible by heads=" + std::to_string(heads));
    if (dropout < 0.0 || dropout >= 1.0)
      throw std::invalid_argument("EncoderConfig: dropout must be in [0,1)");
  }
};

// One (dialogue; question; option) concatenation with its segment geometry.
// Layout: D tokens, [sep], Q tokens, [sep], option tokens, padding. The
// first separator belongs to the dialogue segment, the second to the option
// segment, so the dialogue/option row split is exact: n_d + n_o = n.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<std::uint8_t> mask;  // 1 = real token, 0 = padding
  int dialogue_end = 0;            // n_d; 0 when there is no dialogue
  int question_end = 0;            // dialogue_end + n_q

  int length() const { return static_cast<int>(ids.size()); }

  void validate() const {
    if (ids.size() != mask.size())
      throw std::invalid_argument("TokenSequence: mask length mismatch");
    if (dialogue_end < 0 || question_end < dialogue_end || question_end > length())
      throw std::invalid_argument("TokenSequence: boundaries not increasing within length");
  }
};

// Assembles D;Q;O. Truncation drops dialogue tokens from the front first,
// then option-tail tokens; question tokens go last. pad_option_to extends the
// option segment with [pad] so every option of an example has equal length.
inline TokenSequence build_token_sequence(const std::vector<int>& dialogue_ids,
                                          const std::vector<int>& question_ids,
                                          const std::vector<int>& option_ids, int max_seq_len,
                                          int pad_option_to = 0) {
  std::vector<int> d = dialogue_ids;
  std::vector<int> q = question_ids;
  std::vector<int> o = option_ids;
  const int seps = d.empty() ? 1 : 2;
  auto total = [&] { return static_cast<int>(d.size() + q.size() + o.size()) + seps; };
  if (total() > max_seq_len) {
    const int excess = total() - max_seq_len;
    const int from_dialogue = std::min<int>(excess, static_cast<int>(d.size()));
    d.erase(d.begin(), d.begin() + from_dialogue);
  }
  while (total() > max_seq_len && !o.empty()) o.pop_back();
  while (total() > max_seq_len && !q.empty()) q.pop_back();
  if (total() > max_seq_len)
    throw std::invalid_argument("build_token_sequence: separators alone exceed max_seq_len");

  TokenSequence seq;
  if (!dialogue_ids.empty()) {
    seq.ids = d;
    seq.ids.push_back(kSepId);
  }
  seq.dialogue_end = static_cast<int>(seq.ids.size());
  seq.ids.insert(seq.ids.end(), q.begin(), q.end());
  seq.question_end = static_cast<int>(seq.ids.size());
  seq.ids.push_back(kSepId);
  seq.ids.insert(seq.ids.end(), o.begin(), o.end());
  seq.mask.assign(seq.ids.size(), 1);
  const int opt_len = static_cast<int>(o.size());
  if (pad_option_to > opt_len) {
    const int pad = std::min(pad_option_to - opt_len, max_seq_len - seq.length());
    seq.ids.insert(seq.ids.end(), pad, kPadId);
    seq.mask.insert(seq.mask.end(), pad, 0);
  }
  seq.validate();
  return seq;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

inline Tensor init_uniform(int rows, int cols, Rng& rng) {
  // scaled uniform, fan-based
  const double a = std::sqrt(6.0 / (rows + cols));
  return Tensor::uniform(rows, cols, rng, -a, a);
}

inline void build_encoder_params(ParamStore& store, const EncoderConfig& cfg, int vocab_size,
                                 Rng& rng) {
  cfg.validate();
  const int d = cfg.d, l = cfg.lstm_hidden;
  store.add("enc.tok_embed", init_uniform(vocab_size, d, rng));
  store.add("enc.pos_embed", init_uniform(cfg.max_seq_len, d, rng));
  for (int i = 0; i < cfg.layers; ++i) {
    const std::string p = "enc.l" + std::to_string(i) + ".";
    store.add(p + "ln1.gain", Tensor::full(1, d, 1.0));
    store.add(p + "ln1.bias", Tensor(1, d));
    store.add(p + "attn.wq", init_uniform(d, d, rng));
    store.add(p + "attn.wk", init_uniform(d, d, rng));
    store.add(p + "attn.wv", init_uniform(d, d, rng));
    store.add(p + "attn.wo", init_uniform(d, d, rng));
    store.add(p + "ln2.gain", Tensor::full(1, d, 1.0));
    store.add(p + "ln2.bias", Tensor(1, d));
    store.add(p + "ffn.w1", init_uniform(d, 4 * d, rng));
    store.add(p + "ffn.b1", Tensor(1, 4 * d));
    store.add(p + "ffn.w2", init_uniform(4 * d, d, rng));
    store.add(p + "ffn.b2", Tensor(1, d));
  }
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string p = std::string("enc.klstm.") + dir + ".";
    store.add(p + "w_ih", init_uniform(d, 4 * l, rng));
    store.add(p + "w_hh", init_uniform(l, 4 * l, rng));
    Tensor b(1, 4 * l);
    for (int j = l; j < 2 * l; ++j) b.at(0, j) = 1.0;  // forget-gate bias
    store.add(p + "b", b);
  }
}

// ---------------------------------------------------------------------------
// Forward pieces
// ---------------------------------------------------------------------------

inline Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  const int d = x.cols();
  const Tensor ones_col = Tensor::full(d, 1, 1.0);
  const Tensor ones_row = Tensor::full(1, d, 1.0);
  Tensor mean = scale(matmul(x, ones_col), 1.0 / d);
  Tensor centered = sub(x, matmul(mean, ones_row));
  Tensor var = scale(matmul(mul(centered, centered), ones_col), 1.0 / d);
  Tensor inv = matmul(rsqrt(var, 1e-5), ones_row);
  return add(mul(mul(centered, inv), gain), bias);
}

// Optional training-time dropout; rng may be null for inference.
struct DropoutCtx {
  double rate = 0.0;
  Rng* rng = nullptr;
  Tensor operator()(const Tensor& t) const {
    return (rng != nullptr && rate > 0.0) ? dropout(t, rate, *rng) : t;
  }
};

inline Tensor self_attention(const Tensor& x, const std::vector<std::uint8_t>& mask,
                             const ParamStore& store, const std::string& prefix, int heads) {
  const int d = x.cols();
  const int dh = d / heads;
  Tensor q = matmul(x, store.get(prefix + "wq"));
  Tensor k = matmul(x, store.get(prefix + "wk"));
  Tensor v = matmul(x, store.get(prefix + "wv"));
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
    Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
    Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
    Tensor scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
    Tensor weights = row_softmax_masked(scores, mask);
    outs.push_back(matmul(weights, vh));
  }
  return matmul(concat(outs, 1), store.get(prefix + "wo"));
}

// Toy stand-in for the upstream text encoder: token embedding + learned
// positions + pre-norm self-attention blocks. With zero layers the output is
// exactly embedding + position rows.
inline Tensor encode_sequence(const TokenSequence& seq, const ParamStore& store,
                              const EncoderConfig& cfg, const DropoutCtx& drop = {}) {
  seq.validate();
  const int n = seq.length();
  if (n == 0) throw std::invalid_argument("encode_sequence: empty sequence");
  if (n > cfg.max_seq_len)
    throw std::invalid_argument("encode_sequence: length " + std::to_string(n) +
                                " exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
  Tensor x = add(embedding_rows(store.get("enc.tok_embed"), seq.ids),
                 slice_rows(store.get("enc.pos_embed"), 0, n));
  for (int i = 0; i < cfg.layers; ++i) {
    const std::string p = "enc.l" + std::to_string(i) + ".";
    Tensor h = layer_norm_rows(x, store.get(p + "ln1.gain"), store.get(p + "ln1.bias"));
    x = add(x, drop(self_attention(h, seq.mask, store, p + "attn.", cfg.heads)));
    Tensor h2 = layer_norm_rows(x, store.get(p + "ln2.gain"), store.get(p + "ln2.bias"));
    Tensor f = add(matmul(relu(add(matmul(h2, store.get(p + "ffn.w1")), store.get(p + "ffn.b1"))),
                          store.get(p + "ffn.w2")),
                   store.get(p + "ffn.b2"));
    x = add(x, drop(f));
  }
  return x;
}

// Row slices of one encoded sequence. q_enc rows are the same rows that sit
// inside o_enc, so the containment invariant holds by construction.
struct OptionEncoding {
  Tensor t_enc;  // n x d
  Tensor d_enc;  // n_d x d (undefined when n_d = 0)
  Tensor q_enc;  // n_q x d
  Tensor o_enc;  // n_o x d
  std::vector<std::uint8_t> o_mask;  // valid flags over the option rows
  int n_d = 0, n_q = 0, n_o = 0;
};

inline OptionEncoding split_encoded(const Tensor& t_enc, const TokenSequence& seq) {
  OptionEncoding enc;
  const int n = seq.length();
  enc.t_enc = t_enc;
  enc.n_d = seq.dialogue_end;
  enc.n_q = seq.question_end - seq.dialogue_end;
  enc.n_o = n - seq.dialogue_end;
  if (enc.n_d > 0) enc.d_enc = slice_rows(t_enc, 0, seq.dialogue_end);
  enc.q_enc = slice_rows(t_enc, seq.dialogue_end, seq.question_end);
  enc.o_enc = slice_rows(t_enc, seq.dialogue_end, n);
  enc.o_mask.assign(seq.mask.begin() + seq.dialogue_end, seq.mask.end());
  return enc;
}

struct EncodedExample {
  std::vector<OptionEncoding> options;
};

inline EncodedExample encode_example(const std::vector<TokenSequence>& seqs,
                                     const ParamStore& store, const EncoderConfig& cfg,
                                     const DropoutCtx& drop = {}) {
  EncodedExample ex;
  ex.options.reserve(seqs.size());
  for (const auto& seq : seqs)
    ex.options.push_back(split_encoded(encode_sequence(seq, store, cfg, drop), seq));
  return ex;
}

// ---------------------------------------------------------------------------
// Knowledge pseudo-sentence encoder: BiLSTM over shared token embeddings,
// output is [final forward state; final backward state], always 1 x 2l.
// ---------------------------------------------------------------------------

namespace detail {

inline Tensor lstm_final_state(const Tensor& x, const ParamStore& store, const std::string& p,
                               int l, bool reversed) {
  const int steps = x.rows();
  const Tensor w_ih = store.get(p + "w_ih");
  const Tensor w_hh = store.get(p + "w_hh");
  const Tensor b = store.get(p + "b");
  Tensor h(1, l), c(1, l);
  for (int s = 0; s < steps; ++s) {
    const int t = reversed ? steps - 1 - s : s;
    Tensor xt = slice_rows(x, t, t + 1);
    Tensor z = add(add(matmul(xt, w_ih), matmul(h, w_hh)), b);
    Tensor i = sigmoid(slice_cols(z, 0, l));
    Tensor f = sigmoid(slice_cols(z, l, 2 * l));
    Tensor g = tanh(slice_cols(z, 2 * l, 3 * l));
    Tensor o = sigmoid(slice_cols(z, 3 * l, 4 * l));
    c = add(mul(f, c), mul(i, g));
    h = mul(o, tanh(c));
  }
  return h;
}

}  // namespace detail

inline Tensor encode_pseudo_sentence(const std::vector<int>& token_ids, const ParamStore& store,
                                     const EncoderConfig& cfg) {
  if (token_ids.empty())
    throw std::invalid_argument("encode_pseudo_sentence: empty pseudo-sentence");
  Tensor x = embedding_rows(store.get("enc.tok_embed"), token_ids);
  Tensor fwd = detail::lstm_final_state(x, store, "enc.klstm.fwd.", cfg.lstm_hidden, false);
  Tensor bwd = detail::lstm_final_state(x, store, "enc.klstm.bwd.", cfg.lstm_hidden, true);
  return concat({fwd, bwd}, 1);
}

// Stacks one encoded row per triple; with no triples the learned
// null-knowledge row keeps the injection equations well-formed.
inline Tensor build_knowledge_matrix(const std::vector<std::vector<int>>& pseudo_token_ids,
                                     const ParamStore& store, const EncoderConfig& cfg,
                                     const Tensor& null_row) {
  if (pseudo_token_ids.empty()) return null_row;
  std::vector<Tensor> rows;
  rows.reserve(pseudo_token_ids.size());
  for (const auto& ids : pseudo_token_ids)
    rows.push_back(encode_pseudo_sentence(ids, store, cfg));
  return concat(rows, 0);
}

}  // namespace ocn
