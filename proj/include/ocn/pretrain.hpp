#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocn/encoder.hpp"
#include "ocn/optimizer.hpp"
#include "ocn/params.hpp"
#include "ocn/text.hpp"
#include "ocn/util.hpp"

namespace ocn {

struct PretrainConfig {
  double mask_rate = 0.15;
  bool tail_only = false;  // mask only tokens after the relation token
  int max_seq_len = 35;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int epochs = 3;
  std::uint64_t seed = 1;

  void validate() const {
    if (mask_rate < 0.0 || mask_rate >= 1.0)
      throw std::invalid_argument("PretrainConfig: mask_rate must be in [0,1)");
    if (max_seq_len <= 0 || batch_size <= 0 || learning_rate <= 0.0 || epochs <= 0)
      throw std::invalid_argument("PretrainConfig: hyperparameters must be positive");
  }
};

// One masked sequence: inputs with [mask] substitutions, the original ids at
// the masked positions, and the ascending position list.
struct MaskedExample {
  std::vector<int> input_ids;
  std::vector<int> target_ids;
  std::vector<int> positions;
};

using MaskedBatch = std::vector<MaskedExample>;

inline bool is_relation_token_id(int id) {
  return id >= kFirstRelationId && id <= kLastRelationId;
}

// Selects round(mask_rate * maskable) positions (at least one when any are
// maskable and the rate is positive), sampled without replacement. Reserved
// ids are never maskable; tail_only restricts candidates to positions after
// the relation token and yields nothing when no relation token is present.
inline std::optional<MaskedExample> mask_tokens(const std::vector<int>& seq,
                                                const PretrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (seq.empty()) throw std::invalid_argument("mask_tokens: empty sequence");
  int tail_start = 0;
  if (cfg.tail_only) {
    tail_start = -1;
    for (std::size_t i = 0; i < seq.size(); ++i)
      if (is_relation_token_id(seq[i])) {
        tail_start = static_cast<int>(i) + 1;
        break;
      }
    if (tail_start < 0) return std::nullopt;  // no relation token: record skipped
  }
  std::vector<int> candidates;
  for (std::size_t i = static_cast<std::size_t>(tail_start); i < seq.size(); ++i)
    if (!Vocabulary::is_reserved(seq[i])) candidates.push_back(static_cast<int>(i));

  MaskedExample ex;
  ex.input_ids = seq;
  if (candidates.empty() || cfg.mask_rate == 0.0) return ex;

  std::size_t count = static_cast<std::size_t>(
      std::llround(cfg.mask_rate * static_cast<double>(candidates.size())));
  count = std::max<std::size_t>(count, 1);
  count = std::min(count, candidates.size());
  rng.shuffle(candidates);
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());
  for (int pos : candidates) {
    ex.positions.push_back(pos);
    ex.target_ids.push_back(seq[pos]);
    ex.input_ids[pos] = kMaskId;
  }
  return ex;
}

// Cross-entropy over the vocabulary at the masked positions only, averaged
// over masked positions. The output head is the tied token embedding.
inline Tensor mlm_step(const MaskedBatch& batch, const ParamStore& store,
                       const EncoderConfig& cfg, const DropoutCtx& drop = {}) {
  const Tensor embed = store.get("enc.tok_embed");
  std::vector<Tensor> picked;
  for (const auto& ex : batch) {
    if (ex.positions.empty()) continue;
    TokenSequence seq;
    seq.ids = ex.input_ids;
    seq.mask.assign(ex.input_ids.size(), 1);
    Tensor t_enc = encode_sequence(seq, store, cfg, drop);
    Tensor log_probs = row_log_softmax(matmul(t_enc, transpose(embed)));
    for (std::size_t i = 0; i < ex.positions.size(); ++i)
      picked.push_back(pick(log_probs, ex.positions[i], ex.target_ids[i]));
  }
  if (picked.empty()) throw std::invalid_argument("mlm_step: batch has no masked positions");
  return scale(sum_all(concat(picked, 1)), -1.0 / static_cast<double>(picked.size()));
}

// ---------------------------------------------------------------------------
// Corpora. OMCS-style files hold one plain sentence per line; pseudo-sentence
// files hold one rendered triple per line whose tokens are taken verbatim.
// ---------------------------------------------------------------------------

inline std::vector<std::vector<std::string>> load_sentence_corpus(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : read_lines(path)) {
    auto toks = tokenize(line);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

inline std::vector<std::vector<std::string>> load_pseudo_corpus(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : read_lines(path)) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : line) {
      if (c == ' ') {
        if (!cur.empty()) toks.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) toks.push_back(cur);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

inline void grow_vocabulary(Vocabulary& vocab, const std::vector<std::vector<std::string>>& corpus) {
  for (const auto& sent : corpus)
    for (const auto& tok : sent) vocab.add(tok);
}

inline std::vector<std::vector<int>> corpus_to_ids(
    const std::vector<std::vector<std::string>>& corpus, const Vocabulary& vocab,
    int max_seq_len) {
  std::vector<std::vector<int>> out;
  out.reserve(corpus.size());
  for (const auto& sent : corpus) {
    std::vector<int> ids = vocab.ids_of(sent);
    if (static_cast<int>(ids.size()) > max_seq_len) ids.resize(max_seq_len);
    out.push_back(std::move(ids));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct MlmRunStats {
  long long masked_positions = 0;
  long long non_tail_masked = 0;  // tail_only violations, must stay 0
  long long skipped_records = 0;  // tail_only sequences with no relation token
  std::vector<double> epoch_train_loss;
  std::vector<double> epoch_heldout_loss;
  double initial_heldout_loss = 0.0;
};

namespace detail {

inline int relation_position(const std::vector<int>& seq) {
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (is_relation_token_id(seq[i])) return static_cast<int>(i);
  return -1;
}

inline double mlm_eval_loss(const std::vector<std::vector<int>>& heldout, const ParamStore& store,
                            const EncoderConfig& enc_cfg, const PretrainConfig& cfg,
                            MlmRunStats* stats) {
  // fixed masking seed so evaluations are comparable across epochs
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  double total = 0.0;
  long long count = 0;
  for (const auto& seq : heldout) {
    auto masked = mask_tokens(seq, cfg, rng);
    if (!masked) {
      if (stats) ++stats->skipped_records;
      continue;
    }
    if (masked->positions.empty()) continue;
    Tensor loss = mlm_step({*masked}, store, enc_cfg);
    total += loss.item() * static_cast<double>(masked->positions.size());
    count += static_cast<long long>(masked->positions.size());
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace detail

// Masked-LM pre-training over tokenized id sequences. The store must hold
// encoder parameters (build_encoder_params); heldout may be empty.
inline MlmRunStats pretrain_mlm(ParamStore& store, const EncoderConfig& enc_cfg,
                                const PretrainConfig& cfg,
                                const std::vector<std::vector<int>>& corpus,
                                const std::vector<std::vector<int>>& heldout,
                                std::vector<std::string>* log = nullptr) {
  cfg.validate();
  MlmRunStats stats;
  if (corpus.empty()) throw std::invalid_argument("pretrain_mlm: empty corpus");
  const long long steps_per_epoch =
      (static_cast<long long>(corpus.size()) + cfg.batch_size - 1) / cfg.batch_size;
  AdamConfig adam;
  adam.lr = cfg.learning_rate;
  AdamOptimizer opt(store, adam, steps_per_epoch * cfg.epochs);
  Rng rng(cfg.seed);

  if (!heldout.empty())
    stats.initial_heldout_loss = detail::mlm_eval_loss(heldout, store, enc_cfg, cfg, nullptr);

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    long long epoch_positions = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      MaskedBatch batch;
      for (std::size_t i = start; i < order.size() && i < start + cfg.batch_size; ++i) {
        const auto& seq = corpus[order[i]];
        if (seq.empty()) continue;
        auto masked = mask_tokens(seq, cfg, rng);
        if (!masked) {
          ++stats.skipped_records;
          continue;
        }
        if (masked->positions.empty()) continue;
        if (cfg.tail_only) {
          const int rel = detail::relation_position(seq);
          for (int pos : masked->positions)
            if (pos <= rel) ++stats.non_tail_masked;
        }
        stats.masked_positions += static_cast<long long>(masked->positions.size());
        batch.push_back(std::move(*masked));
      }
      if (batch.empty()) continue;
      Tensor loss = mlm_step(batch, store, enc_cfg);
      long long batch_positions = 0;
      for (const auto& ex : batch) batch_positions += static_cast<long long>(ex.positions.size());
      epoch_loss += loss.item() * static_cast<double>(batch_positions);
      epoch_positions += batch_positions;
      store.zero_grad();
      backward(loss);
      opt.step();
    }
    const double train_loss =
        epoch_positions == 0 ? 0.0 : epoch_loss / static_cast<double>(epoch_positions);
    stats.epoch_train_loss.push_back(train_loss);
    if (!heldout.empty()) {
      stats.epoch_heldout_loss.push_back(
          detail::mlm_eval_loss(heldout, store, enc_cfg, cfg, &stats));
    }
    if (log != nullptr) {
      std::string line = "epoch " + std::to_string(epoch + 1) + " train_mlm_loss " +
                         fmt_double(train_loss);
      if (!heldout.empty()) line += " heldout_mlm_loss " + fmt_double(stats.epoch_heldout_loss.back());
      log->push_back(line);
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Encoder transplant
// ---------------------------------------------------------------------------

inline void export_encoder(const ParamStore& store, const Vocabulary& vocab,
                           const std::string& checkpoint_path) {
  ParamStore enc_only;
  for (const auto& p : store.all())
    if (p.name.rfind("enc.", 0) == 0) enc_only.add(p.name, p.tensor, p.trainable);
  if (enc_only.size() == 0)
    throw std::invalid_argument("export_encoder: store has no encoder parameters");
  save_checkpoint(enc_only, checkpoint_path);
  vocab.save(checkpoint_path + ".vocab");
}

struct ImportInfo {
  std::string path;
  std::string hash;  // content hash of the checkpoint file
};

// Copies enc.* parameters from the checkpoint into an existing model store;
// shape mismatches (e.g. a different d) are rejected with both shapes.
inline ImportInfo import_encoder(ParamStore& store, const std::string& checkpoint_path) {
  restore_into(store, load_checkpoint(checkpoint_path), "enc.");
  return {checkpoint_path, hash_file_hex(checkpoint_path)};
}

inline Vocabulary load_exported_vocab(const std::string& checkpoint_path) {
  return Vocabulary::load(checkpoint_path + ".vocab");
}

}  // namespace ocn
