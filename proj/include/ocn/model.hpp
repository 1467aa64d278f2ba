#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocn/encoder.hpp"
#include "ocn/inject.hpp"
#include "ocn/ocn.hpp"
#include "ocn/params.hpp"
#include "ocn/triples.hpp"

namespace ocn {

enum class InjectMode { None, ConceptNet, Atomic };

inline std::string to_string(InjectMode m) {
  switch (m) {
    case InjectMode::None: return "none";
    case InjectMode::ConceptNet: return "cn";
    case InjectMode::Atomic: return "atomic";
  }
  return "none";
}

inline InjectMode inject_mode_from(const std::string& s) {
  if (s == "none") return InjectMode::None;
  if (s == "cn" || s == "conceptnet") return InjectMode::ConceptNet;
  if (s == "atomic") return InjectMode::Atomic;
  throw std::invalid_argument("unknown injection mode: " + s + " (expected none|cn|atomic)");
}

struct ModelConfig {
  EncoderConfig encoder;
  int num_options = 3;
  InjectMode inject_mode = InjectMode::None;
  int knowledge_cap = 50;
  RelationRendering rendering = RelationRendering::Expanded;
};

inline void build_model_params(ParamStore& store, const ModelConfig& cfg, int vocab_size,
                               Rng& rng) {
  build_encoder_params(store, cfg.encoder, vocab_size, rng);
  build_ocn_params(store, cfg.encoder.d, cfg.num_options, rng);
  build_injection_params(store, cfg.encoder, rng);
}

// One assembled training/eval example: token sequences per option plus the
// already-capped knowledge pseudo-sentences (token ids) attached to the
// dialogue and to each option.
struct ModelExample {
  std::string id;
  std::vector<TokenSequence> seqs;
  std::vector<std::vector<std::vector<int>>> option_knowledge;  // per option
  std::vector<std::vector<int>> dialogue_knowledge;
  int gold = -1;  // -1 when unlabeled
};

struct OptionState {
  OptionEncoding enc;
  Tensor o_new;     // n_o x d
  Tensor o_fuse;    // n_o x d
  Tensor o_reread;  // n_o x d
  Tensor o_final;   // n_o x d
  double score = 0.0;
};

struct ModelOutput {
  Prediction prediction;
  Tensor loss;  // defined only when the example carries a gold index
  std::vector<OptionState> states;
};

inline ModelOutput forward_example(const ParamStore& store, const ModelConfig& cfg,
                                   const ModelExample& ex, const DropoutCtx& drop = {}) {
  const std::size_t count = ex.seqs.size();
  if (count < 2) throw std::invalid_argument("forward_example: need >= 2 options");
  if (ex.option_knowledge.size() != count && !ex.option_knowledge.empty())
    throw std::invalid_argument("forward_example: option knowledge count mismatch");
  const Tensor null_row = store.get("inj.null_row");

  // shared dialogue knowledge encoding (ATOMIC placement), built once
  Tensor h_dialogue;
  if (cfg.inject_mode == InjectMode::Atomic)
    h_dialogue = build_knowledge_matrix(ex.dialogue_knowledge, store, cfg.encoder, null_row);

  std::vector<OptionState> states(count);
  for (std::size_t k = 0; k < count; ++k) {
    const TokenSequence& seq = ex.seqs[k];
    Tensor t_enc = encode_sequence(seq, store, cfg.encoder, drop);
    if (cfg.inject_mode == InjectMode::ConceptNet) {
      std::vector<std::vector<int>> ids = ex.dialogue_knowledge;
      if (!ex.option_knowledge.empty())
        ids.insert(ids.end(), ex.option_knowledge[k].begin(), ex.option_knowledge[k].end());
      Tensor h_all = build_knowledge_matrix(ids, store, cfg.encoder, null_row);
      t_enc = inject(t_enc, h_all, store, seq.mask);
    }
    states[k].enc = split_encoded(t_enc, seq);
    if (cfg.inject_mode == InjectMode::Atomic) {
      Tensor h_opt = build_knowledge_matrix(
          ex.option_knowledge.empty() ? std::vector<std::vector<int>>{} : ex.option_knowledge[k],
          store, cfg.encoder, null_row);
      inject_option_segments(states[k].enc, h_dialogue, h_opt, store);
    }
  }

  std::vector<Tensor> o_encs;
  std::vector<std::vector<std::uint8_t>> o_masks;
  for (auto& st : states) {
    o_encs.push_back(st.enc.o_enc);
    o_masks.push_back(st.enc.o_mask);
  }
  std::vector<Tensor> o_news = compare_options(o_encs, o_masks, store);

  std::vector<Tensor> finals;
  for (std::size_t k = 0; k < count; ++k) {
    OptionState& st = states[k];
    st.o_new = o_news[k];
    st.o_fuse = gate_fuse(st.enc.o_enc, st.o_new, st.enc.q_enc, store);
    // the question encoding substitutes for the dialogue when there is none
    const Tensor& context = st.enc.n_d > 0 ? st.enc.d_enc : st.enc.q_enc;
    st.o_reread = coattend_reread(context, st.o_fuse, st.enc.o_mask, store);
    st.o_final = self_finalize(st.o_reread, st.enc.o_mask, store);
    finals.push_back(st.o_final);
  }

  ModelOutput out;
  out.prediction = score_and_predict(finals, o_masks, store);
  for (std::size_t k = 0; k < count; ++k)
    states[k].score = out.prediction.scores.at(0, static_cast<int>(k));
  out.states = std::move(states);
  if (ex.gold >= 0) out.loss = nll_loss(out.prediction, ex.gold);
  return out;
}

}  // namespace ocn
