#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocn/attention.hpp"
#include "ocn/params.hpp"
#include "ocn/tensor.hpp"

namespace ocn {

// Option-comparison head parameters for hidden size d and |O| options.
// One shared tri-linear weight set serves comparison, co-attention and
// self-attention; the scoring head is a shared linear map d -> 1.
inline void build_ocn_params(ParamStore& store, int d, int num_options, Rng& rng) {
  if (num_options < 2)
    throw std::invalid_argument("build_ocn_params: need at least 2 options");
  store.add("ocn.att.w1", init_uniform(d, 1, rng));
  store.add("ocn.att.w2", init_uniform(d, 1, rng));
  store.add("ocn.att.w3", init_uniform(1, d, rng));
  store.add("ocn.w_c", init_uniform(d + 2 * d * (num_options - 1), d, rng));
  store.add("ocn.w_g", init_uniform(3 * d, d, rng));
  store.add("ocn.v_a", init_uniform(d, 1, rng));
  store.add("ocn.w_p", init_uniform(3 * d, d, rng));
  store.add("ocn.w_f", init_uniform(4 * d, d, rng));
  store.add("ocn.w_score", init_uniform(d, 1, rng));
}

inline Tensor ocn_trilinear(const Tensor& u, const Tensor& v, const ParamStore& store) {
  return trilinear_attention(u, v, store.get("ocn.att.w1"), store.get("ocn.att.w2"),
                             store.get("ocn.att.w3"));
}

// Pairwise option comparison. For each option k, every other option l
// contributes an attended summary; the per-pair score matrix is normalized
// over the compared option's rows before the weighted sum, with that
// option's padding masked out. Comparison blocks follow ascending l.
inline std::vector<Tensor> compare_options(const std::vector<Tensor>& options,
                                           const std::vector<std::vector<std::uint8_t>>& masks,
                                           const ParamStore& store) {
  const std::size_t count = options.size();
  if (count < 2)
    throw std::invalid_argument("compare_options: pairwise comparison needs >= 2 options");
  if (masks.size() != count)
    throw std::invalid_argument("compare_options: mask count mismatch");
  const Tensor w_c = store.get("ocn.w_c");
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<Tensor> blocks{options[k]};
    for (std::size_t l = 0; l < count; ++l) {
      if (l == k) continue;
      Tensor scores = ocn_trilinear(options[k], options[l], store);       // n_k x n_l
      Tensor attended = matmul(row_softmax_masked(scores, masks[l]), options[l]);  // n_k x d
      blocks.push_back(concat({sub(options[k], attended), mul(options[k], attended)}, 1));
    }
    Tensor gathered = concat(blocks, 1);  // n_k x (d + 2d(|O|-1))
    if (gathered.cols() != w_c.rows())
      throw std::invalid_argument("compare_options: concat width " + gathered.shape_str() +
                                  " does not match w_c " + w_c.shape_str());
    out.push_back(tanh(matmul(gathered, w_c)));
  }
  return out;
}

// Gated fusion of the comparison features with the original option rows.
// The question summary is attention-pooled to 1xd and broadcast over the
// option rows; the gate output is an entrywise convex combination.
inline Tensor gate_fuse(const Tensor& o_enc, const Tensor& o_new, const Tensor& q_enc,
                        const ParamStore& store) {
  if (!o_enc.same_shape(o_new))
    throw std::invalid_argument("gate_fuse: option shapes differ, " + o_enc.shape_str() +
                                " vs " + o_new.shape_str());
  Tensor pooling = row_softmax(transpose(matmul(q_enc, store.get("ocn.v_a"))));  // 1 x n_q
  Tensor q_summary = matmul(pooling, q_enc);                                     // 1 x d
  Tensor q_rows = broadcast_rows(q_summary, o_enc.rows());
  Tensor gate = sigmoid(matmul(concat({o_enc, o_new, q_rows}, 1), store.get("ocn.w_g")));
  Tensor ones = Tensor::full(o_enc.rows(), o_enc.cols(), 1.0);
  return add(mul(gate, o_enc), mul(sub(ones, gate), o_new));
}

// Co-attention re-read of the context (dialogue; the question encoding
// substitutes when there is no dialogue).
inline Tensor coattend_reread(const Tensor& context, const Tensor& o_fuse,
                              const std::vector<std::uint8_t>& o_mask, const ParamStore& store) {
  if (!context.defined() || context.rows() < 1)
    throw std::invalid_argument("coattend_reread: empty context");
  Tensor ctx_to_opt = row_softmax_masked(ocn_trilinear(context, o_fuse, store), o_mask);
  Tensor opt_to_ctx = row_softmax(ocn_trilinear(o_fuse, context, store));
  Tensor o_d = matmul(opt_to_ctx, concat({context, matmul(ctx_to_opt, o_fuse)}, 1));  // n_o x 2d
  return relu(matmul(concat({o_d, o_fuse}, 1), store.get("ocn.w_p")));
}

// Self-attention over the re-read option rows and the final feature blocks.
inline Tensor self_finalize(const Tensor& o_reread, const std::vector<std::uint8_t>& o_mask,
                            const ParamStore& store) {
  Tensor weights = row_softmax_masked(ocn_trilinear(o_reread, o_reread, store), o_mask);
  Tensor o_s = matmul(weights, o_reread);
  Tensor o_f = concat({o_reread, o_s, sub(o_reread, o_s), mul(o_reread, o_s)}, 1);  // n_o x 4d
  return relu(matmul(o_f, store.get("ocn.w_f")));
}

struct Prediction {
  Tensor scores;     // 1 x |O|
  Tensor probs;      // 1 x |O|, sums to 1
  Tensor log_probs;  // 1 x |O|
  int pred = -1;
};

// Max-pool each option over its live rows, score with the shared head and
// normalize over options.
inline Prediction score_and_predict(const std::vector<Tensor>& o_finals,
                                    const std::vector<std::vector<std::uint8_t>>& masks,
                                    const ParamStore& store) {
  if (o_finals.size() < 2)
    throw std::invalid_argument("score_and_predict: need >= 2 options");
  const Tensor w_score = store.get("ocn.w_score");
  std::vector<Tensor> scores;
  scores.reserve(o_finals.size());
  for (std::size_t k = 0; k < o_finals.size(); ++k)
    scores.push_back(matmul(max_pool_seq(o_finals[k], masks[k]), w_score));
  Prediction p;
  p.scores = concat(scores, 1);
  p.probs = row_softmax(p.scores);
  p.log_probs = row_log_softmax(p.scores);
  p.pred = 0;
  for (int k = 1; k < p.scores.cols(); ++k)
    if (p.scores.at(0, k) > p.scores.at(0, p.pred)) p.pred = k;
  return p;
}

inline Tensor nll_loss(const Prediction& p, int gold) {
  if (gold < 0 || gold >= p.log_probs.cols())
    throw std::invalid_argument("nll_loss: gold index " + std::to_string(gold) +
                                " out of range for " + std::to_string(p.log_probs.cols()) +
                                " options");
  return scale(pick(p.log_probs, 0, gold), -1.0);
}

}  // namespace ocn
