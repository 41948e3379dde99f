#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "mobascore/core.hpp"

namespace mobascore {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Numerically stable logistic function.
inline double sigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// --- GRU ---------------------------------------------------------------------
// Gate convention, applied per layer and per step:
//   z = sigmoid(W_z x + U_z h + b_z)
//   r = sigmoid(W_r x + U_r h + b_r)
//   g = tanh(W_h x + U_h (r .* h) + b_h)      (candidate state)
//   h' = (1 - z) .* h + z .* g
// Layer l+1 consumes layer l's hidden state at the same step.

struct GruLayerParams {
  Matrix W_z, W_r, W_h;  // hidden x input
  Matrix U_z, U_r, U_h;  // hidden x hidden
  Vector b_z, b_r, b_h;  // hidden

  int input_dim() const { return static_cast<int>(W_z.cols()); }
  int hidden_dim() const { return static_cast<int>(W_z.rows()); }

  static GruLayerParams zeros(int input, int hidden);
  // Entries drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)]: each
  // matrix uses its own column count as fan-in, biases use the hidden size.
  static GruLayerParams init(int input, int hidden, Rng& rng);
};

struct GruStepCache {
  Vector x, h_prev, z, r, g;
};

// cache.steps[layer][t]; layer 0 sees the raw inputs, layer l>0 sees layer
// l-1's hidden states.
struct GruCache {
  std::vector<std::vector<GruStepCache>> steps;
};

struct GruForward {
  std::vector<Vector> top_hidden;  // top-layer hidden state per step
  GruCache cache;
};

// seq must be nonempty and h0 must provide one hidden-sized vector per layer.
GruForward gru_forward(const std::vector<GruLayerParams>& layers, const std::vector<Vector>& seq,
                       const std::vector<Vector>& h0);

struct GruGrads {
  std::vector<GruLayerParams> layers;  // same shapes, holding gradients
  std::vector<Vector> h0;
};

// Exact reverse-mode pass matching gru_forward. upstream_top[t] is the loss
// gradient with respect to the top layer's hidden state at step t.
GruGrads gru_backward(const std::vector<GruLayerParams>& layers, const GruCache& cache,
                      const std::vector<Vector>& upstream_top);

// --- scoring heads -----------------------------------------------------------

struct SlpParams {
  Vector w;
  double b = 0.0;

  static SlpParams zeros(int hidden);
  static SlpParams init(int hidden, Rng& rng);
};

// score = tanh(w . h + b), in (-1, 1).
double slp_score(const SlpParams& params, const Vector& h);

struct SlpBack {
  Vector dw;
  double db = 0.0;
  Vector dh;
};

// score must be the value slp_score produced for h; dscore is the upstream
// loss gradient with respect to the score.
SlpBack slp_backward(const SlpParams& params, const Vector& h, double score, double dscore);

// Fixed 30 -> 15 -> 15 -> 1 network with tanh after every layer.
struct MlpParams {
  std::vector<Matrix> W;
  std::vector<Vector> b;

  static MlpParams zeros(const std::vector<int>& dims);
  static MlpParams init(const std::vector<int>& dims, Rng& rng);
};

struct MlpCache {
  std::vector<Vector> acts;  // acts[0] = input, acts[i] = tanh output of layer i
};

double mlp_score(const MlpParams& params, const Vector& x, MlpCache* cache = nullptr);

struct MlpGrads {
  std::vector<Matrix> dW;
  std::vector<Vector> db;
  Vector dx;
};

MlpGrads mlp_backward(const MlpParams& params, const MlpCache& cache, double dscore);

// --- optimizer ---------------------------------------------------------------

// Adam with bias correction over a flat parameter vector.
struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  Vector m, v;
  long t = 0;

  explicit AdamState(int n = 0) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

void adam_step(Vector& params, const Vector& grads, AdamState& state, double lr);

// --- parameter flattening ----------------------------------------------------
// Fixed traversal order (gates z, r, h: inputs, recurrents, biases; then the
// head) so optimizer state, averaging, and gradient checks all agree.

int param_count(const GruLayerParams& p);
int param_count(const SlpParams& p);
int param_count(const MlpParams& p);

double* flatten_into(const GruLayerParams& p, double* out);
double* flatten_into(const SlpParams& p, double* out);
double* flatten_into(const MlpParams& p, double* out);
const double* unflatten_from(GruLayerParams& p, const double* in);
const double* unflatten_from(SlpParams& p, const double* in);
const double* unflatten_from(MlpParams& p, const double* in);

// --- gradient checking -------------------------------------------------------

// Central differences coordinate by coordinate. Returns the maximum over
// coordinates of |g_analytic - g_numeric| / max(1e-12, |g_analytic| + |g_numeric|).
double finite_diff_check(const std::function<double(const Vector&)>& loss_fn, const Vector& x,
                         const Vector& analytic_grad, double eps);

}  // namespace mobascore
