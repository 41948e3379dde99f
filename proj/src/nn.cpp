#include "mobascore/nn.hpp"

#include <cassert>
#include <cmath>
#include <string>

namespace mobascore {
namespace {

void fill_uniform(double* data, long n, double bound, Rng& rng) {
  for (long i = 0; i < n; ++i) {
    data[i] = rng.uniform(-bound, bound);
  }
}

double init_bound(int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

Vector sigmoid_vec(const Vector& a) {
  return a.unaryExpr([](double v) { return sigmoid(v); });
}

double* copy_out(const Matrix& m, double* out) {
  Eigen::Map<Matrix>(out, m.rows(), m.cols()) = m;
  return out + m.size();
}

double* copy_out(const Vector& v, double* out) {
  Eigen::Map<Vector>(out, v.size()) = v;
  return out + v.size();
}

const double* copy_in(Matrix& m, const double* in) {
  m = Eigen::Map<const Matrix>(in, m.rows(), m.cols());
  return in + m.size();
}

const double* copy_in(Vector& v, const double* in) {
  v = Eigen::Map<const Vector>(in, v.size());
  return in + v.size();
}

}  // namespace

GruLayerParams GruLayerParams::zeros(int input, int hidden) {
  GruLayerParams p;
  p.W_z = Matrix::Zero(hidden, input);
  p.W_r = Matrix::Zero(hidden, input);
  p.W_h = Matrix::Zero(hidden, input);
  p.U_z = Matrix::Zero(hidden, hidden);
  p.U_r = Matrix::Zero(hidden, hidden);
  p.U_h = Matrix::Zero(hidden, hidden);
  p.b_z = Vector::Zero(hidden);
  p.b_r = Vector::Zero(hidden);
  p.b_h = Vector::Zero(hidden);
  return p;
}

GruLayerParams GruLayerParams::init(int input, int hidden, Rng& rng) {
  GruLayerParams p = zeros(input, hidden);
  const double wb = init_bound(input);
  const double ub = init_bound(hidden);
  fill_uniform(p.W_z.data(), p.W_z.size(), wb, rng);
  fill_uniform(p.W_r.data(), p.W_r.size(), wb, rng);
  fill_uniform(p.W_h.data(), p.W_h.size(), wb, rng);
  fill_uniform(p.U_z.data(), p.U_z.size(), ub, rng);
  fill_uniform(p.U_r.data(), p.U_r.size(), ub, rng);
  fill_uniform(p.U_h.data(), p.U_h.size(), ub, rng);
  fill_uniform(p.b_z.data(), p.b_z.size(), ub, rng);
  fill_uniform(p.b_r.data(), p.b_r.size(), ub, rng);
  fill_uniform(p.b_h.data(), p.b_h.size(), ub, rng);
  return p;
}

GruForward gru_forward(const std::vector<GruLayerParams>& layers, const std::vector<Vector>& seq,
                       const std::vector<Vector>& h0) {
  if (layers.empty()) {
    throw ValidationError("gru_forward: no layers");
  }
  if (seq.empty()) {
    throw ValidationError("gru_forward: empty sequence");
  }
  if (h0.size() != layers.size()) {
    throw ValidationError("gru_forward: expected one initial state per layer");
  }
  for (size_t l = 0; l < layers.size(); ++l) {
    const int want = l == 0 ? static_cast<int>(seq[0].size()) : layers[l - 1].hidden_dim();
    if (layers[l].input_dim() != want) {
      throw ValidationError("gru_forward: layer " + std::to_string(l) + " expects input size " +
                            std::to_string(layers[l].input_dim()) + ", got " + std::to_string(want));
    }
    if (h0[l].size() != layers[l].hidden_dim()) {
      throw ValidationError("gru_forward: initial state size mismatch at layer " + std::to_string(l));
    }
  }

  const size_t T = seq.size();
  GruForward out;
  out.cache.steps.resize(layers.size());
  std::vector<Vector> cur = seq;
  for (size_t l = 0; l < layers.size(); ++l) {
    const GruLayerParams& p = layers[l];
    auto& steps = out.cache.steps[l];
    steps.reserve(T);
    Vector h = h0[l];
    for (size_t t = 0; t < T; ++t) {
      const Vector& x = cur[t];
      Vector z = sigmoid_vec(p.W_z * x + p.U_z * h + p.b_z);
      Vector r = sigmoid_vec(p.W_r * x + p.U_r * h + p.b_r);
      Vector g = (p.W_h * x + p.U_h * r.cwiseProduct(h) + p.b_h).array().tanh();
      Vector h_new = (1.0 - z.array()) * h.array() + z.array() * g.array();
      steps.push_back({x, h, std::move(z), std::move(r), std::move(g)});
      h = std::move(h_new);
      cur[t] = h;
    }
  }
  for (const Vector& h : cur) {
    assert(h.allFinite());
    (void)h;
  }
  out.top_hidden = std::move(cur);
  return out;
}

GruGrads gru_backward(const std::vector<GruLayerParams>& layers, const GruCache& cache,
                      const std::vector<Vector>& upstream_top) {
  const size_t L = layers.size();
  if (cache.steps.size() != L) {
    throw ValidationError("gru_backward: cache does not match layer count");
  }
  const size_t T = cache.steps.empty() ? 0 : cache.steps[0].size();
  if (upstream_top.size() != T) {
    throw ValidationError("gru_backward: upstream length does not match cached steps");
  }

  GruGrads grads;
  grads.layers.reserve(L);
  grads.h0.resize(L);
  for (const GruLayerParams& p : layers) {
    grads.layers.push_back(GruLayerParams::zeros(p.input_dim(), p.hidden_dim()));
  }

  std::vector<Vector> upstream = upstream_top;
  for (size_t li = L; li-- > 0;) {
    const GruLayerParams& p = layers[li];
    GruLayerParams& g = grads.layers[li];
    std::vector<Vector> dx;
    if (li > 0) {
      dx.resize(T);
    }
    Vector carry = Vector::Zero(p.hidden_dim());
    for (size_t t = T; t-- > 0;) {
      const GruStepCache& c = cache.steps[li][t];
      const Vector dh = upstream[t] + carry;

      const Vector dg = dh.cwiseProduct(c.z);
      const Vector dz = dh.cwiseProduct(c.g - c.h_prev);
      Vector dh_prev = dh.cwiseProduct(Vector::Ones(dh.size()) - c.z);

      const Vector da_g = dg.array() * (1.0 - c.g.array().square());
      const Vector drh = p.U_h.transpose() * da_g;
      const Vector dr = drh.cwiseProduct(c.h_prev);
      dh_prev += drh.cwiseProduct(c.r);

      const Vector da_r = dr.array() * c.r.array() * (1.0 - c.r.array());
      const Vector da_z = dz.array() * c.z.array() * (1.0 - c.z.array());

      g.W_z += da_z * c.x.transpose();
      g.W_r += da_r * c.x.transpose();
      g.W_h += da_g * c.x.transpose();
      g.U_z += da_z * c.h_prev.transpose();
      g.U_r += da_r * c.h_prev.transpose();
      g.U_h += da_g * c.r.cwiseProduct(c.h_prev).transpose();
      g.b_z += da_z;
      g.b_r += da_r;
      g.b_h += da_g;

      dh_prev += p.U_r.transpose() * da_r + p.U_z.transpose() * da_z;
      carry = std::move(dh_prev);
      if (li > 0) {
        dx[t] = p.W_z.transpose() * da_z + p.W_r.transpose() * da_r + p.W_h.transpose() * da_g;
      }
    }
    grads.h0[li] = std::move(carry);
    if (li > 0) {
      upstream = std::move(dx);
    }
  }
  return grads;
}

SlpParams SlpParams::zeros(int hidden) {
  SlpParams p;
  p.w = Vector::Zero(hidden);
  p.b = 0.0;
  return p;
}

SlpParams SlpParams::init(int hidden, Rng& rng) {
  SlpParams p = zeros(hidden);
  const double bound = init_bound(hidden);
  fill_uniform(p.w.data(), p.w.size(), bound, rng);
  p.b = rng.uniform(-bound, bound);
  return p;
}

double slp_score(const SlpParams& params, const Vector& h) {
  if (h.size() != params.w.size()) {
    throw ValidationError("slp_score: input size mismatch");
  }
  return std::tanh(params.w.dot(h) + params.b);
}

SlpBack slp_backward(const SlpParams& params, const Vector& h, double score, double dscore) {
  const double da = dscore * (1.0 - score * score);
  SlpBack back;
  back.dw = da * h;
  back.db = da;
  back.dh = da * params.w;
  return back;
}

MlpParams MlpParams::zeros(const std::vector<int>& dims) {
  if (dims.size() < 2) {
    throw ValidationError("MlpParams: need at least input and output dims");
  }
  MlpParams p;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    p.W.push_back(Matrix::Zero(dims[i + 1], dims[i]));
    p.b.push_back(Vector::Zero(dims[i + 1]));
  }
  return p;
}

MlpParams MlpParams::init(const std::vector<int>& dims, Rng& rng) {
  MlpParams p = zeros(dims);
  for (size_t i = 0; i < p.W.size(); ++i) {
    const double bound = init_bound(dims[i]);
    fill_uniform(p.W[i].data(), p.W[i].size(), bound, rng);
    fill_uniform(p.b[i].data(), p.b[i].size(), bound, rng);
  }
  return p;
}

double mlp_score(const MlpParams& params, const Vector& x, MlpCache* cache) {
  if (params.W.empty()) {
    throw ValidationError("mlp_score: empty network");
  }
  if (x.size() != params.W[0].cols()) {
    throw ValidationError("mlp_score: input size mismatch");
  }
  Vector a = x;
  if (cache != nullptr) {
    cache->acts.clear();
    cache->acts.push_back(a);
  }
  for (size_t i = 0; i < params.W.size(); ++i) {
    a = (params.W[i] * a + params.b[i]).array().tanh();
    if (cache != nullptr) {
      cache->acts.push_back(a);
    }
  }
  if (a.size() != 1) {
    throw ValidationError("mlp_score: network does not end in a scalar");
  }
  assert(std::isfinite(a(0)));
  return a(0);
}

MlpGrads mlp_backward(const MlpParams& params, const MlpCache& cache, double dscore) {
  const size_t L = params.W.size();
  if (cache.acts.size() != L + 1) {
    throw ValidationError("mlp_backward: cache does not match network depth");
  }
  MlpGrads g;
  g.dW.resize(L);
  g.db.resize(L);
  Vector d = Vector::Constant(1, dscore);
  for (size_t i = L; i-- > 0;) {
    const Vector& out = cache.acts[i + 1];
    const Vector da = d.array() * (1.0 - out.array().square());
    g.dW[i] = da * cache.acts[i].transpose();
    g.db[i] = da;
    d = params.W[i].transpose() * da;
  }
  g.dx = std::move(d);
  return g;
}

void adam_step(Vector& params, const Vector& grads, AdamState& state, double lr) {
  if (grads.size() != params.size()) {
    throw ValidationError("adam_step: gradient size mismatch");
  }
  if (state.m.size() != params.size()) {
    throw ValidationError("adam_step: optimizer state size mismatch");
  }
  state.t += 1;
  state.m = AdamState::kBeta1 * state.m + (1.0 - AdamState::kBeta1) * grads;
  state.v = AdamState::kBeta2 * state.v.array() + (1.0 - AdamState::kBeta2) * grads.array().square();
  const double bc1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(state.t));
  params.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + AdamState::kEpsilon);
}

int param_count(const GruLayerParams& p) {
  return static_cast<int>(p.W_z.size() + p.W_r.size() + p.W_h.size() + p.U_z.size() + p.U_r.size() +
                          p.U_h.size() + p.b_z.size() + p.b_r.size() + p.b_h.size());
}

int param_count(const SlpParams& p) { return static_cast<int>(p.w.size()) + 1; }

int param_count(const MlpParams& p) {
  long n = 0;
  for (const Matrix& w : p.W) {
    n += w.size();
  }
  for (const Vector& b : p.b) {
    n += b.size();
  }
  return static_cast<int>(n);
}

double* flatten_into(const GruLayerParams& p, double* out) {
  out = copy_out(p.W_z, out);
  out = copy_out(p.W_r, out);
  out = copy_out(p.W_h, out);
  out = copy_out(p.U_z, out);
  out = copy_out(p.U_r, out);
  out = copy_out(p.U_h, out);
  out = copy_out(p.b_z, out);
  out = copy_out(p.b_r, out);
  out = copy_out(p.b_h, out);
  return out;
}

double* flatten_into(const SlpParams& p, double* out) {
  out = copy_out(p.w, out);
  *out++ = p.b;
  return out;
}

double* flatten_into(const MlpParams& p, double* out) {
  for (size_t i = 0; i < p.W.size(); ++i) {
    out = copy_out(p.W[i], out);
    out = copy_out(p.b[i], out);
  }
  return out;
}

const double* unflatten_from(GruLayerParams& p, const double* in) {
  in = copy_in(p.W_z, in);
  in = copy_in(p.W_r, in);
  in = copy_in(p.W_h, in);
  in = copy_in(p.U_z, in);
  in = copy_in(p.U_r, in);
  in = copy_in(p.U_h, in);
  in = copy_in(p.b_z, in);
  in = copy_in(p.b_r, in);
  in = copy_in(p.b_h, in);
  return in;
}

const double* unflatten_from(SlpParams& p, const double* in) {
  in = copy_in(p.w, in);
  p.b = *in++;
  return in;
}

const double* unflatten_from(MlpParams& p, const double* in) {
  for (size_t i = 0; i < p.W.size(); ++i) {
    in = copy_in(p.W[i], in);
    in = copy_in(p.b[i], in);
  }
  return in;
}

double finite_diff_check(const std::function<double(const Vector&)>& loss_fn, const Vector& x,
                         const Vector& analytic_grad, double eps) {
  if (analytic_grad.size() != x.size()) {
    throw ValidationError("finite_diff_check: gradient size mismatch");
  }
  Vector probe = x;
  double worst = 0.0;
  for (long i = 0; i < probe.size(); ++i) {
    const double orig = probe(i);
    probe(i) = orig + eps;
    const double up = loss_fn(probe);
    probe(i) = orig - eps;
    const double down = loss_fn(probe);
    probe(i) = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double analytic = analytic_grad(i);
    const double denom = std::max(1e-12, std::abs(analytic) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

}  // namespace mobascore
