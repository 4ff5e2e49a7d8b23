#include "trajcraft/diffusion/model.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "trajcraft/diffusion/schedule.hpp"
#include "trajcraft/errors.hpp"

namespace trajcraft::diffusion {

const char* group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::patch_embed: return "patch_embed";
    case ParamGroup::cross_attention: return "cross_attention";
    case ParamGroup::backbone: return "backbone";
  }
  return "?";
}

namespace {

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

constexpr double kLayerNormEps = 1e-6;

template <typename T>
Linear<T> zero_linear(int in, int out) {
  return {Matrix<T>::Zero(in, out), Matrix<T>::Zero(1, out)};
}

template <typename T>
Matrix<T> apply(const Linear<T>& l, const Matrix<T>& x) {
  Matrix<T> y = x * l.weight;
  y.rowwise() += l.bias.row(0);
  return y;
}

// Adds the parameter gradients when `want` is set and returns dL/dx.
template <typename T>
Matrix<T> apply_backward(const Linear<T>& l, const Matrix<T>& x, const Matrix<T>& dy,
                         Linear<T>& g, bool want) {
  if (want) {
    g.weight.noalias() += x.transpose() * dy;
    g.bias += dy.colwise().sum();
  }
  return dy * l.weight.transpose();
}

template <typename T>
T sigmoid(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

template <typename T>
Matrix<T> silu(const Matrix<T>& x) {
  return x.unaryExpr([](T v) { return v * sigmoid(v); });
}

template <typename T>
Matrix<T> silu_grad(const Matrix<T>& x) {
  return x.unaryExpr([](T v) {
    const T s = sigmoid(v);
    return s * (T{1} + v * (T{1} - s));
  });
}

// tanh approximation of GELU.
template <typename T>
Matrix<T> gelu(const Matrix<T>& x) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  return x.unaryExpr([k](T v) {
    return T(0.5) * v * (T{1} + std::tanh(k * (v + T(0.044715) * v * v * v)));
  });
}

template <typename T>
Matrix<T> gelu_grad(const Matrix<T>& x) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  return x.unaryExpr([k](T v) {
    const T th = std::tanh(k * (v + T(0.044715) * v * v * v));
    return T(0.5) * (T{1} + th) +
           T(0.5) * v * (T{1} - th * th) * k * (T{1} + T(3 * 0.044715) * v * v);
  });
}

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, Vec<T>& rstd) {
  Matrix<T> y(x.rows(), x.cols());
  rstd.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mean = x.row(r).mean();
    const auto centered = (x.row(r).array() - mean).eval();
    const T var = centered.square().mean();
    const T rs = T{1} / std::sqrt(var + static_cast<T>(kLayerNormEps));
    y.row(r) = centered * rs;
    rstd(r) = rs;
  }
  return y;
}

template <typename T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const Matrix<T>& y, const Vec<T>& rstd) {
  Matrix<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T mean_dy = dy.row(r).mean();
    const T mean_dyy = (dy.row(r).array() * y.row(r).array()).mean();
    dx.row(r) = rstd(r) * (dy.row(r).array() - mean_dy - y.row(r).array() * mean_dyy);
  }
  return dx;
}

template <typename T>
RowVec<T> segment(const Matrix<T>& mod, int index, int d) {
  return mod.row(0).segment(static_cast<Eigen::Index>(index) * d, d);
}

template <typename T>
Matrix<T> modulate(const Matrix<T>& n, const RowVec<T>& shift, const RowVec<T>& scale) {
  Matrix<T> h = n;
  h.array().rowwise() *= (scale.array() + T{1});
  h.array().rowwise() += shift.array();
  return h;
}

// Gradient through n * (1 + scale) + shift; shift/scale gradients land in dmod.
template <typename T>
Matrix<T> modulate_backward(const Matrix<T>& dh, const Matrix<T>& n, const RowVec<T>& scale,
                            Matrix<T>& dmod, int shift_index, int scale_index, int d) {
  dmod.row(0).segment(static_cast<Eigen::Index>(shift_index) * d, d) += dh.colwise().sum();
  dmod.row(0).segment(static_cast<Eigen::Index>(scale_index) * d, d) +=
      (dh.array() * n.array()).matrix().colwise().sum();
  Matrix<T> dn = dh;
  dn.array().rowwise() *= (scale.array() + T{1});
  return dn;
}

template <typename T>
Matrix<T> gated(const Matrix<T>& x, const RowVec<T>& gate) {
  Matrix<T> y = x;
  y.array().rowwise() *= gate.array();
  return y;
}

template <typename T>
void softmax_rows(Matrix<T>& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const T m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp();
    s.row(r) /= s.row(r).sum();
  }
}

template <typename T>
Matrix<T> attention(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v, int heads,
                    std::vector<Matrix<T>>& probs) {
  const Eigen::Index d = q.cols();
  const Eigen::Index dh = d / heads;
  const T scale = T{1} / std::sqrt(static_cast<T>(dh));
  Matrix<T> out(q.rows(), d);
  probs.resize(heads);
  for (int h = 0; h < heads; ++h) {
    Matrix<T> s = (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) * scale;
    softmax_rows(s);
    out.middleCols(h * dh, dh).noalias() = s * v.middleCols(h * dh, dh);
    probs[h] = std::move(s);
  }
  return out;
}

template <typename T>
void attention_backward(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                        const std::vector<Matrix<T>>& probs, const Matrix<T>& dout, int heads,
                        Matrix<T>& dq, Matrix<T>& dk, Matrix<T>& dv) {
  const Eigen::Index d = q.cols();
  const Eigen::Index dh = d / heads;
  const T scale = T{1} / std::sqrt(static_cast<T>(dh));
  dq.resize(q.rows(), d);
  dk.resize(k.rows(), d);
  dv.resize(v.rows(), d);
  for (int h = 0; h < heads; ++h) {
    const Matrix<T>& p = probs[h];
    const Matrix<T> dout_h = dout.middleCols(h * dh, dh);
    dv.middleCols(h * dh, dh).noalias() = p.transpose() * dout_h;
    Matrix<T> ds = dout_h * v.middleCols(h * dh, dh).transpose();
    for (Eigen::Index r = 0; r < ds.rows(); ++r) {
      const T dot = (ds.row(r).array() * p.row(r).array()).sum();
      ds.row(r) = (p.row(r).array() * (ds.row(r).array() - dot)).matrix();
    }
    dq.middleCols(h * dh, dh).noalias() = (ds * k.middleCols(h * dh, dh)) * scale;
    dk.middleCols(h * dh, dh).noalias() = (ds.transpose() * q.middleCols(h * dh, dh)) * scale;
  }
}

// --- DiT block -------------------------------------------------------------------------------

template <typename T>
struct DitCache {
  Matrix<T> c, sc, mod, n1, h1, q, k, v, a1, o1, n2, h2, u, gu, o2;
  Vec<T> rstd1, rstd2;
  std::vector<Matrix<T>> probs;
};

template <typename T>
Matrix<T> dit_forward(const DitBlockParams<T>& b, int heads, const Matrix<T>& x,
                      const Matrix<T>& c, DitCache<T>& k) {
  const int d = static_cast<int>(x.cols());
  k.c = c;
  k.sc = silu(c);
  k.mod = apply(b.modulation, k.sc);
  k.n1 = layer_norm(x, k.rstd1);
  k.h1 = modulate(k.n1, segment(k.mod, 0, d), segment(k.mod, 1, d));
  const Matrix<T> qkv = apply(b.qkv, k.h1);
  k.q = qkv.leftCols(d);
  k.k = qkv.middleCols(d, d);
  k.v = qkv.rightCols(d);
  k.a1 = attention(k.q, k.k, k.v, heads, k.probs);
  k.o1 = apply(b.attn_out, k.a1);
  Matrix<T> x1 = x + gated(k.o1, segment(k.mod, 2, d));
  k.n2 = layer_norm(x1, k.rstd2);
  k.h2 = modulate(k.n2, segment(k.mod, 3, d), segment(k.mod, 4, d));
  k.u = apply(b.mlp_in, k.h2);
  k.gu = gelu(k.u);
  k.o2 = apply(b.mlp_out, k.gu);
  x1 += gated(k.o2, segment(k.mod, 5, d));
  return x1;
}

template <typename T>
Matrix<T> dit_backward(const DitBlockParams<T>& b, int heads, const DitCache<T>& k,
                       const Matrix<T>& dy, DitBlockParams<T>& g, bool want, Matrix<T>& dc) {
  const int d = static_cast<int>(dy.cols());
  Matrix<T> dmod = Matrix<T>::Zero(1, 6 * d);

  dmod.row(0).segment(5 * d, d) = (dy.array() * k.o2.array()).matrix().colwise().sum();
  const Matrix<T> dgu =
      apply_backward(b.mlp_out, k.gu, gated(dy, segment(k.mod, 5, d)), g.mlp_out, want);
  const Matrix<T> du = (dgu.array() * gelu_grad(k.u).array()).matrix();
  const Matrix<T> dh2 = apply_backward(b.mlp_in, k.h2, du, g.mlp_in, want);
  const Matrix<T> dn2 = modulate_backward(dh2, k.n2, segment(k.mod, 4, d), dmod, 3, 4, d);
  const Matrix<T> dx1 = dy + layer_norm_backward(dn2, k.n2, k.rstd2);

  dmod.row(0).segment(2 * d, d) = (dx1.array() * k.o1.array()).matrix().colwise().sum();
  const Matrix<T> da1 =
      apply_backward(b.attn_out, k.a1, gated(dx1, segment(k.mod, 2, d)), g.attn_out, want);
  Matrix<T> dq, dk, dv;
  attention_backward(k.q, k.k, k.v, k.probs, da1, heads, dq, dk, dv);
  Matrix<T> dqkv(dy.rows(), 3 * d);
  dqkv << dq, dk, dv;
  const Matrix<T> dh1 = apply_backward(b.qkv, k.h1, dqkv, g.qkv, want);
  const Matrix<T> dn1 = modulate_backward(dh1, k.n1, segment(k.mod, 1, d), dmod, 0, 1, d);
  Matrix<T> dx = dx1 + layer_norm_backward(dn1, k.n1, k.rstd1);

  const Matrix<T> dsc = apply_backward(b.modulation, k.sc, dmod, g.modulation, want);
  dc += (dsc.array() * silu_grad(k.c).array()).matrix();
  return dx;
}

// --- Ref-DiT block ---------------------------------------------------------------------------

template <typename T>
struct RefDitCache {
  Matrix<T> c, sc, mod, n1, h1, q, k, v, a1, o1;
  Vec<T> rstd1;
  std::vector<Matrix<T>> probs;
  bool has_ref = false;
  int text_len = 0;
  Matrix<T> nq, cq, ck, cv, a2;
  Vec<T> rstdq;
  std::vector<Matrix<T>> cross_probs;
};

template <typename T>
Matrix<T> refdit_forward(const RefDitBlockParams<T>& b, int heads, int text_len,
                         const Matrix<T>& x, const Matrix<T>* ref, const Matrix<T>& c,
                         RefDitCache<T>& k) {
  const int d = static_cast<int>(x.cols());
  if (text_len < 0 || text_len > x.rows()) throw ShapeError("refdit_block: bad text length");
  k.text_len = text_len;
  k.c = c;
  k.sc = silu(c);
  k.mod = apply(b.modulation, k.sc);
  k.n1 = layer_norm(x, k.rstd1);
  k.h1 = modulate(k.n1, segment(k.mod, 0, d), segment(k.mod, 1, d));
  const Matrix<T> qkv = apply(b.qkv, k.h1);
  k.q = qkv.leftCols(d);
  k.k = qkv.middleCols(d, d);
  k.v = qkv.rightCols(d);
  k.a1 = attention(k.q, k.k, k.v, heads, k.probs);
  k.o1 = apply(b.attn_out, k.a1);
  Matrix<T> x1 = x + gated(k.o1, segment(k.mod, 2, d));

  k.has_ref = ref != nullptr && ref->rows() > 0;
  if (k.has_ref) {
    if (ref->cols() != d) throw ShapeError("refdit_block: reference token width differs");
    const Eigen::Index n_view = x.rows() - text_len;
    const Matrix<T> view = x1.bottomRows(n_view);
    k.nq = layer_norm(view, k.rstdq);
    k.cq = apply(b.cross_q, k.nq);
    k.ck = apply(b.cross_k, *ref);
    k.cv = apply(b.cross_v, *ref);
    k.a2 = attention(k.cq, k.ck, k.cv, heads, k.cross_probs);
    x1.bottomRows(n_view) += apply(b.cross_out, k.a2);
  }
  return x1;
}

template <typename T>
Matrix<T> refdit_backward(const RefDitBlockParams<T>& b, int heads, const RefDitCache<T>& k,
                          const Matrix<T>* ref, const Matrix<T>& dy, RefDitBlockParams<T>& g,
                          const GradientRequest& req, Matrix<T>& dc, Matrix<T>* dref) {
  const int d = static_cast<int>(dy.cols());
  const bool want_backbone = req.wants(ParamGroup::backbone);
  const bool want_cross = req.wants(ParamGroup::cross_attention);
  Matrix<T> dx1 = dy;
  if (k.has_ref) {
    const Eigen::Index n_view = dy.rows() - k.text_len;
    const Matrix<T> dco = dy.bottomRows(n_view);
    const Matrix<T> da2 = apply_backward(b.cross_out, k.a2, dco, g.cross_out, want_cross);
    Matrix<T> dcq, dck, dcv;
    attention_backward(k.cq, k.ck, k.cv, k.cross_probs, da2, heads, dcq, dck, dcv);
    const Matrix<T> dnq = apply_backward(b.cross_q, k.nq, dcq, g.cross_q, want_cross);
    const Matrix<T> dref_k = apply_backward(b.cross_k, *ref, dck, g.cross_k, want_cross);
    const Matrix<T> dref_v = apply_backward(b.cross_v, *ref, dcv, g.cross_v, want_cross);
    if (dref) *dref += dref_k + dref_v;
    dx1.bottomRows(n_view) += layer_norm_backward(dnq, k.nq, k.rstdq);
  }

  Matrix<T> dmod = Matrix<T>::Zero(1, 3 * d);
  dmod.row(0).segment(2 * d, d) = (dx1.array() * k.o1.array()).matrix().colwise().sum();
  const Matrix<T> da1 = apply_backward(b.attn_out, k.a1, gated(dx1, segment(k.mod, 2, d)),
                                       g.attn_out, want_backbone);
  Matrix<T> dq, dk, dv;
  attention_backward(k.q, k.k, k.v, k.probs, da1, heads, dq, dk, dv);
  Matrix<T> dqkv(dy.rows(), 3 * d);
  dqkv << dq, dk, dv;
  const Matrix<T> dh1 = apply_backward(b.qkv, k.h1, dqkv, g.qkv, want_backbone);
  const Matrix<T> dn1 = modulate_backward(dh1, k.n1, segment(k.mod, 1, d), dmod, 0, 1, d);
  Matrix<T> dx = dx1 + layer_norm_backward(dn1, k.n1, k.rstd1);

  const Matrix<T> dsc = apply_backward(b.modulation, k.sc, dmod, g.modulation, want_backbone);
  dc += (dsc.array() * silu_grad(k.c).array()).matrix();
  return dx;
}

// --- whole model -----------------------------------------------------------------------------

template <typename T>
Matrix<T> time_features(double t, int dim) {
  const int half = dim / 2;
  Matrix<T> f(1, dim);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    const double arg = 1000.0 * t * freq;
    f(0, i) = static_cast<T>(std::cos(arg));
    f(0, half + i) = static_cast<T>(std::sin(arg));
  }
  return f;
}

template <typename T>
struct ModelCache {
  GridShape grid;
  Matrix<T> raw, ref_raw, feat, h_time, s_time, c, ref;
  bool has_ref = false;
  std::vector<DitCache<T>> dit;
  std::vector<RefDitCache<T>> refdit;
  Matrix<T> sc_final, fmod, n_final, h_final;
  Vec<T> rstd_final;
};

template <typename T>
VideoTensor<T> reference_condition(const VideoTensor<T>& ref) {
  if (ref.channels != 3) throw ShapeError("reference video must have 3 channels");
  const VideoTensor<T> ones(ref.frames, 1, ref.height, ref.width, T{1});
  return build_condition(ref, ref, ones);
}

// Returns the output tokens (view count x patch_out).
template <typename T>
Matrix<T> model_forward(const ModelParams<T>& p, const VideoTensor<T>& x_t, double t,
                        const VideoTensor<T>& render, const VideoTensor<T>& mask,
                        const VideoTensor<T>* ref, ModelCache<T>& k) {
  const ModelConfig& cfg = p.config;
  if (x_t.channels != ModelConfig::kChannelsOut) {
    throw ShapeError("predict_noise: x_t must have 3 channels, got " + x_t.shape_string());
  }
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("predict_noise: t must lie in [0, 1]");
  const VideoTensor<T> cond = build_condition(x_t, render, mask);
  k.grid = grid_shape(cond.frames, cond.height, cond.width, cfg.patch);
  k.raw = patchify_raw(cond, cfg.patch);
  Matrix<T> view = apply(p.patch_embed, k.raw) + positional_embedding<T>(k.grid, cfg.d_model);
  const Eigen::Index n_view = view.rows();

  Matrix<T> x(cfg.text_len + n_view, cfg.d_model);
  x << p.text_tokens, view;

  k.feat = time_features<T>(t, cfg.time_freq_dim);
  k.h_time = apply(p.time_in, k.feat);
  k.s_time = silu(k.h_time);
  k.c = apply(p.time_out, k.s_time);

  k.has_ref = ref != nullptr;
  if (k.has_ref) {
    const VideoTensor<T> rc = reference_condition(*ref);
    const GridShape rg = grid_shape(rc.frames, rc.height, rc.width, cfg.patch);
    k.ref_raw = patchify_raw(rc, cfg.patch);
    k.ref = apply(p.patch_embed, k.ref_raw) + positional_embedding<T>(rg, cfg.d_model);
  }

  k.dit.assign(p.dit.size(), {});
  k.refdit.assign(p.refdit.size(), {});
  for (const auto& [is_ref, i] : block_order(cfg)) {
    if (is_ref) {
      x = refdit_forward(p.refdit[i], cfg.n_heads, cfg.text_len, x, k.has_ref ? &k.ref : nullptr,
                         k.c, k.refdit[i]);
    } else {
      x = dit_forward(p.dit[i], cfg.n_heads, x, k.c, k.dit[i]);
    }
  }

  const int d = cfg.d_model;
  k.sc_final = silu(k.c);
  k.fmod = apply(p.final_modulation, k.sc_final);
  k.n_final = layer_norm(Matrix<T>(x.bottomRows(n_view)), k.rstd_final);
  k.h_final = modulate(k.n_final, segment(k.fmod, 0, d), segment(k.fmod, 1, d));
  return apply(p.head, k.h_final);
}

template <typename T>
void model_backward(const ModelParams<T>& p, const ModelCache<T>& k, const Matrix<T>& dout,
                    ModelParams<T>& g, const GradientRequest& req) {
  const ModelConfig& cfg = p.config;
  const int d = cfg.d_model;
  const bool want_backbone = req.wants(ParamGroup::backbone);

  Matrix<T> dc = Matrix<T>::Zero(1, d);
  Matrix<T> dfmod = Matrix<T>::Zero(1, 2 * d);
  const Matrix<T> dh = apply_backward(p.head, k.h_final, dout, g.head, want_backbone);
  const Matrix<T> dn = modulate_backward(dh, k.n_final, segment(k.fmod, 1, d), dfmod, 0, 1, d);
  const Eigen::Index n_view = dout.rows();
  Matrix<T> dx = Matrix<T>::Zero(cfg.text_len + n_view, d);
  dx.bottomRows(n_view) = layer_norm_backward(dn, k.n_final, k.rstd_final);
  const Matrix<T> dsc =
      apply_backward(p.final_modulation, k.sc_final, dfmod, g.final_modulation, want_backbone);
  dc += (dsc.array() * silu_grad(k.c).array()).matrix();

  Matrix<T> dref;
  if (k.has_ref) dref = Matrix<T>::Zero(k.ref.rows(), d);
  const auto order = block_order(cfg);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto [is_ref, i] = *it;
    if (is_ref) {
      dx = refdit_backward(p.refdit[i], cfg.n_heads, k.refdit[i], k.has_ref ? &k.ref : nullptr,
                           dx, g.refdit[i], req, dc, k.has_ref ? &dref : nullptr);
    } else {
      dx = dit_backward(p.dit[i], cfg.n_heads, k.dit[i], dx, g.dit[i], want_backbone, dc);
    }
  }

  if (want_backbone) {
    g.text_tokens += dx.topRows(cfg.text_len);
    const Matrix<T> ds_time = apply_backward(p.time_out, k.s_time, dc, g.time_out, true);
    const Matrix<T> dh_time = (ds_time.array() * silu_grad(k.h_time).array()).matrix();
    apply_backward(p.time_in, k.feat, dh_time, g.time_in, true);
  }
  if (req.wants(ParamGroup::patch_embed)) {
    const Matrix<T> dview = dx.bottomRows(n_view);
    g.patch_embed.weight.noalias() += k.raw.transpose() * dview;
    g.patch_embed.bias += dview.colwise().sum();
    if (k.has_ref) {
      g.patch_embed.weight.noalias() += k.ref_raw.transpose() * dref;
      g.patch_embed.bias += dref.colwise().sum();
    }
  }
}

template <typename T>
void check_example(const DenoisingExample<T>& ex) {
  if (!ex.x0 || !ex.eps || !ex.render || !ex.mask) {
    throw ValidationError("denoising example is missing a tensor");
  }
  if (!ex.x0->same_shape(*ex.eps)) {
    throw ShapeError("noise " + ex.eps->shape_string() + " does not match " +
                     ex.x0->shape_string());
  }
}

template <typename T>
void fill_xavier(Matrix<T>& m, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(dist(rng));
}

template <typename T>
void fill_normal(Matrix<T>& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(dist(rng));
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

// --- public API ------------------------------------------------------------------------------

std::vector<std::pair<bool, int>> block_order(const ModelConfig& cfg) {
  std::vector<std::pair<bool, int>> order;
  size_t r = 0;
  for (int i = 0; i <= cfg.n_dit_blocks; ++i) {
    while (r < cfg.refdit_positions.size() && cfg.refdit_positions[r] == i) {
      order.emplace_back(true, static_cast<int>(r++));
    }
    if (i < cfg.n_dit_blocks) order.emplace_back(false, i);
  }
  return order;
}

template <typename T>
size_t ModelParams<T>::parameter_count() const {
  size_t n = 0;
  for_each([&n](const std::string&, ParamGroup, const Matrix<T>& m) { n += m.size(); });
  return n;
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  bool ok = true;
  for_each([&ok](const std::string&, ParamGroup, const Matrix<T>& m) {
    ok = ok && m.allFinite();
  });
  return ok;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros_like() const {
  return allocate_params<T>(config);
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out = allocate_params<U>(config);
  std::vector<const Matrix<T>*> src;
  for_each([&src](const std::string&, ParamGroup, const Matrix<T>& m) { src.push_back(&m); });
  size_t i = 0;
  out.for_each([&](const std::string&, ParamGroup, Matrix<U>& m) {
    m = src[i++]->template cast<U>();
  });
  return out;
}

template <typename T>
ModelParams<T> allocate_params(const ModelConfig& cfg) {
  cfg.validate();
  const int d = cfg.d_model;
  ModelParams<T> p;
  p.config = cfg;
  p.patch_embed = zero_linear<T>(cfg.patch_in(), d);
  p.text_tokens = Matrix<T>::Zero(cfg.text_len, d);
  p.time_in = zero_linear<T>(cfg.time_freq_dim, d);
  p.time_out = zero_linear<T>(d, d);
  for (int i = 0; i < cfg.n_dit_blocks; ++i) {
    p.dit.push_back({zero_linear<T>(d, 6 * d), zero_linear<T>(d, 3 * d), zero_linear<T>(d, d),
                     zero_linear<T>(d, cfg.mlp_ratio * d), zero_linear<T>(cfg.mlp_ratio * d, d)});
  }
  for (size_t i = 0; i < cfg.refdit_positions.size(); ++i) {
    p.refdit.push_back({zero_linear<T>(d, 3 * d), zero_linear<T>(d, 3 * d), zero_linear<T>(d, d),
                        zero_linear<T>(d, d), zero_linear<T>(d, d), zero_linear<T>(d, d),
                        zero_linear<T>(d, d)});
  }
  p.final_modulation = zero_linear<T>(d, 2 * d);
  p.head = zero_linear<T>(d, cfg.patch_out());
  return p;
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams<T> p = allocate_params<T>(cfg);
  std::mt19937_64 rng(seed);
  p.for_each([&rng](const std::string& name, ParamGroup, Matrix<T>& m) {
    if (ends_with(name, ".bias") || name.find("modulation") != std::string::npos ||
        name.starts_with("head.") || name.find("cross_out") != std::string::npos) {
      return;  // stays zero
    }
    if (name == "text_tokens" || name.starts_with("time_")) {
      fill_normal(m, 0.02, rng);
    } else {
      fill_xavier(m, rng);
    }
  });
  return p;
}

template <typename T>
Matrix<T> positional_embedding(const GridShape& grid, int d_model) {
  const int dim_t = (d_model / 3) & ~1;
  const int dim_y = dim_t;
  const int dim_x = d_model - dim_t - dim_y;
  Matrix<T> out = Matrix<T>::Zero(grid.count(), d_model);
  const auto fill = [&out](Eigen::Index row, int col0, int dim, double pos) {
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
      out(row, col0 + i) = static_cast<T>(std::sin(pos * freq));
      out(row, col0 + half + i) = static_cast<T>(std::cos(pos * freq));
    }
  };
  for (int gt = 0; gt < grid.t; ++gt) {
    for (int gy = 0; gy < grid.h; ++gy) {
      for (int gx = 0; gx < grid.w; ++gx) {
        const Eigen::Index row = (gt * grid.h + gy) * grid.w + gx;
        fill(row, 0, dim_t, gt);
        fill(row, dim_t, dim_y, gy);
        fill(row, dim_t + dim_y, dim_x, gx);
      }
    }
  }
  return out;
}

template <typename T>
TokenGrid<T> patchify(const VideoTensor<T>& condition, const ModelParams<T>& params) {
  if (condition.channels != ModelConfig::kChannelsIn) {
    throw ShapeError("patchify expects a 7-channel condition, got " + condition.shape_string());
  }
  TokenGrid<T> out;
  out.grid = grid_shape(condition.frames, condition.height, condition.width, params.config.patch);
  out.tokens = apply(params.patch_embed, patchify_raw(condition, params.config.patch)) +
               positional_embedding<T>(out.grid, params.config.d_model);
  return out;
}

template <typename T>
Matrix<T> timestep_embedding(const ModelParams<T>& params, double t) {
  const Matrix<T> h = apply(params.time_in, time_features<T>(t, params.config.time_freq_dim));
  return apply(params.time_out, silu(h));
}

template <typename T>
Matrix<T> dit_block(const DitBlockParams<T>& block, int n_heads, const Matrix<T>& tokens,
                    const Matrix<T>& t_embed) {
  DitCache<T> cache;
  return dit_forward(block, n_heads, tokens, t_embed, cache);
}

template <typename T>
Matrix<T> refdit_block(const RefDitBlockParams<T>& block, int n_heads, int text_len,
                       const Matrix<T>& tokens, const Matrix<T>* ref_tokens,
                       const Matrix<T>& t_embed) {
  RefDitCache<T> cache;
  return refdit_forward(block, n_heads, text_len, tokens, ref_tokens, t_embed, cache);
}

template <typename T>
VideoTensor<T> predict_noise(const ModelParams<T>& params, const VideoTensor<T>& x_t, double t,
                             const VideoTensor<T>& render, const VideoTensor<T>& mask,
                             const VideoTensor<T>* ref) {
  ModelCache<T> cache;
  const Matrix<T> out = model_forward(params, x_t, t, render, mask, ref, cache);
  return unpatchify(out, cache.grid, params.config.patch, ModelConfig::kChannelsOut);
}

template <typename T>
T denoising_loss(const ModelParams<T>& params, const DenoisingExample<T>& ex) {
  check_example(ex);
  const VideoTensor<T> x_t = forward_noise(*ex.x0, ex.t, *ex.eps);
  const VideoTensor<T> pred = predict_noise(params, x_t, ex.t, *ex.render, *ex.mask, ex.ref);
  T sum{0};
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const T e = pred.data[i] - ex.eps->data[i];
    sum += e * e;
  }
  return sum / static_cast<T>(pred.data.size());
}

template <typename T>
T denoising_loss_and_grad(const ModelParams<T>& params, const DenoisingExample<T>& ex,
                          ModelParams<T>& grads, const GradientRequest& request, T weight) {
  check_example(ex);
  const VideoTensor<T> x_t = forward_noise(*ex.x0, ex.t, *ex.eps);
  ModelCache<T> cache;
  const Matrix<T> out = model_forward(params, x_t, ex.t, *ex.render, *ex.mask, ex.ref, cache);
  const Matrix<T> target = patchify_raw(*ex.eps, params.config.patch);
  const Matrix<T> err = out - target;
  const T count = static_cast<T>(err.size());
  const T loss = err.squaredNorm() / count;
  const Matrix<T> dout = err * (T{2} * weight / count);
  model_backward(params, cache, dout, grads, request);
  return loss;
}

#define TRAJCRAFT_INSTANTIATE(T)                                                                 \
  template struct ModelParams<T>;                                                                \
  template ModelParams<T> allocate_params<T>(const ModelConfig&);                                \
  template ModelParams<T> init_params<T>(const ModelConfig&, std::uint64_t);                     \
  template Matrix<T> positional_embedding<T>(const GridShape&, int);                             \
  template TokenGrid<T> patchify(const VideoTensor<T>&, const ModelParams<T>&);                  \
  template Matrix<T> timestep_embedding(const ModelParams<T>&, double);                          \
  template Matrix<T> dit_block(const DitBlockParams<T>&, int, const Matrix<T>&,                  \
                               const Matrix<T>&);                                                \
  template Matrix<T> refdit_block(const RefDitBlockParams<T>&, int, int, const Matrix<T>&,       \
                                  const Matrix<T>*, const Matrix<T>&);                           \
  template VideoTensor<T> predict_noise(const ModelParams<T>&, const VideoTensor<T>&, double,    \
                                        const VideoTensor<T>&, const VideoTensor<T>&,            \
                                        const VideoTensor<T>*);                                  \
  template T denoising_loss(const ModelParams<T>&, const DenoisingExample<T>&);                  \
  template T denoising_loss_and_grad(const ModelParams<T>&, const DenoisingExample<T>&,          \
                                     ModelParams<T>&, const GradientRequest&, T);

TRAJCRAFT_INSTANTIATE(float)
TRAJCRAFT_INSTANTIATE(double)
#undef TRAJCRAFT_INSTANTIATE

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;

}  // namespace trajcraft::diffusion
