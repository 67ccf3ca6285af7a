#include "pica/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "pica/embedding.hpp"
#include "pica/kernels.hpp"

namespace pica {

namespace {

// One softmax cross-entropy block over cosine logits.
struct BlockInput {
  const Matrix* anchors = nullptr;
  const Matrix* candidates = nullptr;       // learnable prefix
  const Matrix* extra = nullptr;            // optional frozen tail (memory queue)
  std::size_t extra_rows = 0;
  std::span<const int> positives;           // candidate row per anchor
  double tau = 0.0;
  bool anchor_grads = false;                // anchors learnable?
  std::size_t learnable_candidates = 0;     // prefix rows of `candidates`
};

struct BlockResult {
  double loss = 0.0;
  Matrix d_anchors;          // filled when anchor_grads
  Matrix d_candidates;       // learnable_candidates x d
  double d_log_tau = 0.0;
};

Matrix normalized_rows(const Matrix& m, Vec& norms, const char* what) {
  kernels::row_norms(m, norms);
  Matrix unit(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (norms[i] <= kZeroNormEps) {
      throw std::invalid_argument(std::string(what) + ": zero-norm row");
    }
    const double inv = 1.0 / norms[i];
    const double* src = m.row(i);
    double* dst = unit.row(i);
    for (std::size_t k = 0; k < m.cols; ++k) dst[k] = inv * src[k];
  }
  return unit;
}

// Stacks candidates and the optional frozen tail into one matrix.
Matrix stack_rows(const Matrix& a, const Matrix* tail, std::size_t tail_rows) {
  if (tail == nullptr || tail_rows == 0) return a;
  Matrix out(a.rows + tail_rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) out.set_row(i, a.row_span(i));
  for (std::size_t k = 0; k < tail_rows; ++k) {
    out.set_row(a.rows + k, tail->row_span(k));
  }
  return out;
}

BlockResult nce_block(const BlockInput& in, bool with_grads) {
  const Matrix& A = *in.anchors;
  const Matrix C = stack_rows(*in.candidates, in.extra, in.extra_rows);
  const std::size_t n = A.rows;
  const std::size_t m = C.rows;
  if (n == 0) throw std::invalid_argument("info_nce: no anchors");
  if (m < 2) throw std::invalid_argument("info_nce: fewer than 2 candidates");
  if (A.cols != C.cols) throw std::invalid_argument("info_nce: dim mismatch");
  if (!(in.tau > 0.0)) throw std::invalid_argument("info_nce: tau must be > 0");
  if (in.positives.size() != n) {
    throw std::invalid_argument("info_nce: positives size mismatch");
  }
  for (int p : in.positives) {
    if (p < 0 || static_cast<std::size_t>(p) >= m) {
      throw std::invalid_argument("info_nce: positive index out of range");
    }
  }

  Vec na, nc;
  const Matrix Ahat = normalized_rows(A, na, "info_nce anchors");
  const Matrix Chat = normalized_rows(C, nc, "info_nce candidates");

  Matrix S;  // cosine logits before the 1/tau scale
  kernels::matmul_nt(Ahat, Chat, S);

  const double inv_tau = 1.0 / in.tau;
  const double inv_n = 1.0 / static_cast<double>(n);

  BlockResult res;
  // P starts as exp((S - rowmax)/tau) and is normalized into softmax rows.
  Matrix P(with_grads ? n : 0, with_grads ? m : 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* s = S.row(i);
    double mx = s[0];
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, s[j]);
    double z = 0.0;
    if (with_grads) {
      double* p = P.row(i);
      for (std::size_t j = 0; j < m; ++j) {
        p[j] = std::exp((s[j] - mx) * inv_tau);
        z += p[j];
      }
      const double inv_z = 1.0 / z;
      for (std::size_t j = 0; j < m; ++j) p[j] *= inv_z;
    } else {
      for (std::size_t j = 0; j < m; ++j) z += std::exp((s[j] - mx) * inv_tau);
    }
    const double s_pos = s[in.positives[i]];
    res.loss += (-s_pos + mx) * inv_tau + std::log(z);
  }
  res.loss *= inv_n;
  if (!with_grads) return res;

  // M_ij = dLoss/dS_ij = (p_ij - [j == pos_i]) / (n tau); reuse P's storage.
  Matrix& M = P;
  const double scale = inv_n * inv_tau;
  Vec row_dot(n, 0.0);  // sum_j M_ij S_ij
  for (std::size_t i = 0; i < n; ++i) {
    double* mrow = M.row(i);
    const double* srow = S.row(i);
    mrow[in.positives[i]] -= 1.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      mrow[j] *= scale;
      acc += mrow[j] * srow[j];
    }
    row_dot[i] = acc;
  }

  double dlt = 0.0;
  for (std::size_t i = 0; i < n; ++i) dlt += row_dot[i];
  res.d_log_tau = -dlt;

  if (in.anchor_grads) {
    Matrix MC;  // sum_j M_ij Chat_j
    kernels::matmul_nn(M, Chat, MC);
    res.d_anchors = Matrix(n, A.cols);
    for (std::size_t i = 0; i < n; ++i) {
      const double inv_norm = 1.0 / na[i];
      const double* mc = MC.row(i);
      const double* ahat = Ahat.row(i);
      double* out = res.d_anchors.row(i);
      for (std::size_t k = 0; k < A.cols; ++k) {
        out[k] = (mc[k] - row_dot[i] * ahat[k]) * inv_norm;
      }
    }
  }

  const std::size_t L = in.learnable_candidates;
  if (L > 0) {
    Matrix MtA;  // first L rows of M^T Ahat
    kernels::matmul_tn_prefix(M, Ahat, L, MtA);
    Vec col_dot(L, 0.0);  // sum_i M_ij S_ij for learnable columns
    for (std::size_t i = 0; i < n; ++i) {
      const double* mrow = M.row(i);
      const double* srow = S.row(i);
      for (std::size_t j = 0; j < L; ++j) col_dot[j] += mrow[j] * srow[j];
    }
    res.d_candidates = Matrix(L, C.cols);
    for (std::size_t j = 0; j < L; ++j) {
      const double inv_norm = 1.0 / nc[j];
      const double* mta = MtA.row(j);
      const double* chat = Chat.row(j);
      double* out = res.d_candidates.row(j);
      for (std::size_t k = 0; k < C.cols; ++k) {
        out[k] = (mta[k] - col_dot[j] * chat[k]) * inv_norm;
      }
    }
  }
  return res;
}

std::vector<int> identity_positives(std::size_t n) {
  std::vector<int> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[i] = static_cast<int>(i);
  return pos;
}

}  // namespace

double info_nce(const Matrix& anchors, const Matrix& candidates, double tau) {
  if (anchors.rows != candidates.rows) {
    throw std::invalid_argument("info_nce: anchor/candidate count mismatch");
  }
  if (anchors.rows < 2) {
    throw std::invalid_argument("info_nce: fewer than 2 pairs");
  }
  const auto pos = identity_positives(anchors.rows);
  BlockInput in;
  in.anchors = &anchors;
  in.candidates = &candidates;
  in.positives = pos;
  in.tau = tau;
  return nce_block(in, false).loss;
}

double curriculum_loss(const Matrix& mapped_aug, const Matrix& pseudo,
                       const Matrix& pseudo_aug, double tau,
                       const FeatureQueue* memory, bool memory_in_second_term) {
  const std::size_t n = mapped_aug.rows;
  if (n < 2) throw std::invalid_argument("curriculum_loss: fewer than 2 regions");
  if (pseudo.rows != n || pseudo_aug.rows != n) {
    throw std::invalid_argument("curriculum_loss: row count mismatch");
  }
  const auto pos = identity_positives(n);
  const std::size_t mem_rows = memory ? memory->size() : 0;

  BlockInput t1;
  t1.anchors = &mapped_aug;
  t1.candidates = &pseudo;
  t1.extra = mem_rows ? &memory->storage() : nullptr;
  t1.extra_rows = mem_rows;
  t1.positives = pos;
  t1.tau = tau;

  BlockInput t2;
  t2.anchors = &pseudo_aug;
  t2.candidates = &mapped_aug;
  t2.extra = (memory_in_second_term && mem_rows) ? &memory->storage() : nullptr;
  t2.extra_rows = memory_in_second_term ? mem_rows : 0;
  t2.positives = pos;
  t2.tau = tau;

  return nce_block(t1, false).loss + nce_block(t2, false).loss;
}

double grounding_loss(const Matrix& pseudo_labeled,
                      std::span<const int> label_proto, const Matrix& protos,
                      double tau, bool* degenerate) {
  if (degenerate != nullptr) *degenerate = false;
  if (pseudo_labeled.rows != label_proto.size()) {
    throw std::invalid_argument("grounding_loss: label count mismatch");
  }
  if (pseudo_labeled.rows == 0 || protos.rows < 2) {
    if (degenerate != nullptr) *degenerate = true;
    return 0.0;
  }
  BlockInput in;
  in.anchors = &pseudo_labeled;
  in.candidates = &protos;
  in.positives = label_proto;
  in.tau = tau;
  return nce_block(in, false).loss;
}

LossBreakdown total_loss(double l_ground, double l_curr, double lambda_curr) {
  if (lambda_curr < 0.0) {
    throw std::invalid_argument("total_loss: negative lambda");
  }
  LossBreakdown out;
  out.l_ground = l_ground;
  out.l_curr = l_curr;
  out.lambda_curr = lambda_curr;
  out.l_total = l_ground + lambda_curr * l_curr;
  return out;
}

Vec GradientSet::flatten() const {
  Vec flat;
  flat.reserve(dW.data.size() + db.size() + 1);
  flat.insert(flat.end(), dW.data.begin(), dW.data.end());
  flat.insert(flat.end(), db.begin(), db.end());
  flat.push_back(d_log_tau);
  return flat;
}

double GradientSet::norm() const {
  double acc = 0.0;
  for (double g : dW.data) acc += g * g;
  for (double g : db) acc += g * g;
  acc += d_log_tau * d_log_tau;
  return std::sqrt(acc);
}

void GradientSet::scale(double s) {
  for (double& g : dW.data) g *= s;
  for (double& g : db) g *= s;
  d_log_tau *= s;
}

namespace {

struct StepPlan {
  bool use_clean = false;  // w (clean pseudo-words) participates
  bool use_aug = false;    // w~ (augmented pseudo-words) participates
};

StepPlan plan_for(const StepBatch& batch) {
  StepPlan plan;
  if (batch.lambda_curr > 0.0 && batch.f_sel_clean.rows > 0) {
    switch (batch.mode) {
      case PseudoWordMode::clean_only: plan.use_clean = true; break;
      case PseudoWordMode::aug_only: plan.use_aug = true; break;
      case PseudoWordMode::both: plan.use_clean = plan.use_aug = true; break;
    }
  }
  return plan;
}

void validate_step(const StepBatch& batch, const ProjectionHead& head) {
  if (batch.base_protos == nullptr) {
    throw std::invalid_argument("step: missing prototypes");
  }
  if (batch.lambda_curr < 0.0) {
    throw std::invalid_argument("step: negative lambda");
  }
  if (batch.lambda_curr > 0.0 && batch.f_sel_clean.rows < 2) {
    throw std::invalid_argument("step: fewer than 2 selected regions");
  }
  if (batch.f_sel_aug.rows != batch.f_sel_clean.rows ||
      batch.mapped_aug.rows != batch.f_sel_clean.rows) {
    throw std::invalid_argument("step: selected-set row mismatch");
  }
  if (batch.f_labeled.rows != batch.label_proto.size()) {
    throw std::invalid_argument("step: label count mismatch");
  }
  const auto d_v = static_cast<std::size_t>(head.d_v());
  if ((batch.f_sel_clean.rows && batch.f_sel_clean.cols != d_v) ||
      (batch.f_labeled.rows && batch.f_labeled.cols != d_v)) {
    throw std::invalid_argument("step: visual dimension mismatch");
  }
}

}  // namespace

LossBreakdown step_forward(const StepBatch& batch, const ProjectionHead& head) {
  validate_step(batch, head);
  const double tau = head.tau();
  double l_curr = 0.0;
  const StepPlan plan = plan_for(batch);
  if (plan.use_clean || plan.use_aug) {
    Matrix w_clean, w_aug;
    if (plan.use_clean) kernels::affine_batch(head.W, head.b, batch.f_sel_clean, w_clean);
    if (plan.use_aug) kernels::affine_batch(head.W, head.b, batch.f_sel_aug, w_aug);
    const Matrix& term1_cands = plan.use_clean ? w_clean : w_aug;
    const Matrix& term2_anchors = plan.use_aug ? w_aug : w_clean;
    l_curr = curriculum_loss(batch.mapped_aug, term1_cands, term2_anchors, tau,
                             batch.memory, batch.memory_in_second_term);
  }
  Matrix w_lab;
  kernels::affine_batch(head.W, head.b, batch.f_labeled, w_lab);
  bool degenerate = false;
  const double l_ground = grounding_loss(w_lab, batch.label_proto,
                                         *batch.base_protos, tau, &degenerate);
  LossBreakdown out = total_loss(l_ground, l_curr, batch.lambda_curr);
  out.grounding_degenerate = degenerate;
  return out;
}

std::pair<LossBreakdown, GradientSet> step_forward_backward(
    const StepBatch& batch, const ProjectionHead& head) {
  validate_step(batch, head);
  const double tau = head.tau();
  const std::size_t n_sel = batch.f_sel_clean.rows;
  const auto pos = identity_positives(n_sel);
  const std::size_t mem_rows = batch.memory ? batch.memory->size() : 0;

  GradientSet grads;
  grads.dW = Matrix(head.d_t(), head.d_v());
  grads.db.assign(head.d_t(), 0.0);

  // Accumulates d(loss)/d(pseudo-word) * dpseudo/d(W, b) for one feature set.
  auto accumulate_affine = [&](const Matrix& g, const Matrix& features) {
    Matrix contrib;
    kernels::matmul_tn_prefix(g, features, g.cols, contrib);
    for (std::size_t t = 0; t < contrib.rows; ++t) {
      double* acc = grads.dW.row(t);
      const double* add = contrib.row(t);
      for (std::size_t k = 0; k < contrib.cols; ++k) acc[k] += add[k];
    }
    for (std::size_t i = 0; i < g.rows; ++i) {
      const double* row = g.row(i);
      for (std::size_t t = 0; t < g.cols; ++t) grads.db[t] += row[t];
    }
  };

  double l_curr = 0.0;
  const StepPlan plan = plan_for(batch);
  if (plan.use_clean || plan.use_aug) {
    Matrix w_clean, w_aug;
    if (plan.use_clean) kernels::affine_batch(head.W, head.b, batch.f_sel_clean, w_clean);
    if (plan.use_aug) kernels::affine_batch(head.W, head.b, batch.f_sel_aug, w_aug);
    const Matrix& term1_cands = plan.use_clean ? w_clean : w_aug;
    const Matrix& term2_anchors = plan.use_aug ? w_aug : w_clean;

    BlockInput t1;
    t1.anchors = &batch.mapped_aug;
    t1.candidates = &term1_cands;
    t1.extra = mem_rows ? &batch.memory->storage() : nullptr;
    t1.extra_rows = mem_rows;
    t1.positives = pos;
    t1.tau = tau;
    t1.anchor_grads = false;
    t1.learnable_candidates = n_sel;
    BlockResult r1 = nce_block(t1, true);

    BlockInput t2;
    t2.anchors = &term2_anchors;
    t2.candidates = &batch.mapped_aug;
    t2.extra = (batch.memory_in_second_term && mem_rows) ? &batch.memory->storage() : nullptr;
    t2.extra_rows = batch.memory_in_second_term ? mem_rows : 0;
    t2.positives = pos;
    t2.tau = tau;
    t2.anchor_grads = true;
    t2.learnable_candidates = 0;
    BlockResult r2 = nce_block(t2, true);

    l_curr = r1.loss + r2.loss;
    const double lam = batch.lambda_curr;
    for (double& g : r1.d_candidates.data) g *= lam;
    for (double& g : r2.d_anchors.data) g *= lam;
    grads.d_log_tau += lam * (r1.d_log_tau + r2.d_log_tau);

    // term-1 candidate grads land on whichever pseudo-words were used there;
    // term-2 anchor grads land on the term-2 set. In `both` mode those are
    // different feature sets, in the single modes they coincide.
    const Matrix& t1_features =
        plan.use_clean ? batch.f_sel_clean : batch.f_sel_aug;
    const Matrix& t2_features =
        plan.use_aug ? batch.f_sel_aug : batch.f_sel_clean;
    accumulate_affine(r1.d_candidates, t1_features);
    accumulate_affine(r2.d_anchors, t2_features);
  }

  Matrix w_lab;
  kernels::affine_batch(head.W, head.b, batch.f_labeled, w_lab);
  bool degenerate = false;
  double l_ground = 0.0;
  if (batch.f_labeled.rows > 0 && batch.base_protos->rows >= 2) {
    BlockInput g;
    g.anchors = &w_lab;
    g.candidates = batch.base_protos;
    g.positives = batch.label_proto;
    g.tau = tau;
    g.anchor_grads = true;
    g.learnable_candidates = 0;
    BlockResult rg = nce_block(g, true);
    l_ground = rg.loss;
    grads.d_log_tau += rg.d_log_tau;
    accumulate_affine(rg.d_anchors, batch.f_labeled);
  } else {
    degenerate = true;
  }

  LossBreakdown out = total_loss(l_ground, l_curr, batch.lambda_curr);
  out.grounding_degenerate = degenerate;
  return {out, std::move(grads)};
}

void SgdMomentum::init(const ProjectionHead& head) {
  vW = Matrix(head.d_t(), head.d_v());
  vb.assign(head.d_t(), 0.0);
  v_log_tau = 0.0;
}

void SgdMomentum::step(ProjectionHead& head, const GradientSet& g, double lr) {
  if (vW.rows != g.dW.rows || vW.cols != g.dW.cols) {
    throw std::invalid_argument("SgdMomentum: not initialized for this head");
  }
  for (std::size_t i = 0; i < vW.data.size(); ++i) {
    vW.data[i] = momentum * vW.data[i] + g.dW.data[i];
    head.W.data[i] -= lr * vW.data[i];
  }
  for (std::size_t t = 0; t < vb.size(); ++t) {
    vb[t] = momentum * vb[t] + g.db[t];
    head.b[t] -= lr * vb[t];
  }
  v_log_tau = momentum * v_log_tau + g.d_log_tau;
  head.log_tau -= lr * v_log_tau;
  head.clamp_tau();
}

double cosine_lr(double lr0, int iter, int total) {
  if (total < 1 || iter < 0 || iter >= total) {
    throw std::invalid_argument("cosine_lr: iteration outside schedule");
  }
  const double frac = static_cast<double>(iter) / static_cast<double>(total);
  return lr0 * 0.5 * (1.0 + std::cos(frac * 3.14159265358979323846));
}

}  // namespace pica
