#pragma once

#include <cstdint>
#include <vector>

#include "ocn/attention.hpp"
#include "ocn/encoder.hpp"
#include "ocn/params.hpp"
#include "ocn/tensor.hpp"

namespace ocn {

// Knowledge-injection parameters. The similarity is computed between the
// text rows and the projected knowledge rows (both width d) with an
// attention weight set of its own, separate from the comparison head's.
inline void build_injection_params(ParamStore& store, const EncoderConfig& cfg, Rng& rng) {
  const int d = cfg.d, l = cfg.lstm_hidden;
  store.add("inj.w_proj", init_uniform(2 * l, d, rng));
  store.add("inj.w_a", init_uniform(4 * d, d, rng));
  store.add("inj.null_row", init_uniform(1, 2 * l, rng));
  store.add("inj.att.w1", init_uniform(d, 1, rng));
  store.add("inj.att.w2", init_uniform(d, 1, rng));
  store.add("inj.att.w3", init_uniform(1, d, rng));
}

// Attention-based injection of an encoded knowledge matrix into a text
// encoding. text_mask flags the live text rows; knowledge rows are always
// live (an empty triple set was replaced by the null row upstream).
inline Tensor inject(const Tensor& t_enc, const Tensor& h_m, const ParamStore& store,
                     const std::vector<std::uint8_t>& text_mask = {}) {
  const int d = t_enc.cols();
  const Tensor w_proj = store.get("inj.w_proj");
  if (h_m.cols() != w_proj.rows())
    throw std::invalid_argument("inject: knowledge width " + h_m.shape_str() +
                                " does not match w_proj " + w_proj.shape_str());
  if (w_proj.cols() != d)
    throw std::invalid_argument("inject: text width " + t_enc.shape_str() +
                                " does not match w_proj " + w_proj.shape_str());
  Tensor h_proj = matmul(h_m, w_proj);  // m x d
  Tensor s = trilinear_attention(t_enc, h_proj, store.get("inj.att.w1"),
                                 store.get("inj.att.w2"), store.get("inj.att.w3"));  // n x m
  Tensor text_to_knowledge = row_softmax(s);  // n x m
  Tensor a_m = matmul(text_to_knowledge, h_proj);  // n x d
  Tensor knowledge_to_text = text_mask.empty()
                                 ? row_softmax(transpose(s))
                                 : row_softmax_masked(transpose(s), text_mask);  // m x n
  Tensor a_t = matmul(text_to_knowledge, matmul(knowledge_to_text, t_enc));  // n x d
  Tensor t_c = concat({t_enc, a_m, mul(t_enc, a_m), mul(t_enc, a_t)}, 1);    // n x 4d
  return relu(matmul(t_c, store.get("inj.w_a")));
}

// ATOMIC-style placement: option relations go into o_enc, dialogue relations
// into d_enc. q_enc is re-sliced so it stays a sub-block of the injected
// option rows. (ConceptNet mode instead injects once into the full t_enc
// before segment splitting; see the model pipeline.)
inline void inject_option_segments(OptionEncoding& enc, const Tensor& h_dialogue,
                                   const Tensor& h_option, const ParamStore& store) {
  if (enc.n_d > 0) enc.d_enc = inject(enc.d_enc, h_dialogue, store);
  enc.o_enc = inject(enc.o_enc, h_option, store, enc.o_mask);
  enc.q_enc = slice_rows(enc.o_enc, 0, enc.n_q);
}

}  // namespace ocn
