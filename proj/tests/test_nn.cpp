#include "doctest.h"

#include <cmath>
#include <vector>

#include "mobascore/nn.hpp"

using namespace mobascore;

namespace {

std::vector<GruLayerParams> random_layers(int input, int hidden, int n_layers, Rng& rng) {
  std::vector<GruLayerParams> layers;
  layers.push_back(GruLayerParams::init(input, hidden, rng));
  for (int l = 1; l < n_layers; ++l) {
    layers.push_back(GruLayerParams::init(hidden, hidden, rng));
  }
  return layers;
}

std::vector<Vector> random_seq(int dim, int steps, Rng& rng) {
  std::vector<Vector> seq;
  for (int t = 0; t < steps; ++t) {
    Vector x(dim);
    for (int i = 0; i < dim; ++i) {
      x[i] = rng.uniform(-1.0, 1.0);
    }
    seq.push_back(x);
  }
  return seq;
}

std::vector<Vector> random_h0(int hidden, int n_layers, Rng& rng) {
  std::vector<Vector> h0;
  for (int l = 0; l < n_layers; ++l) {
    Vector h(hidden);
    for (int i = 0; i < hidden; ++i) {
      h[i] = rng.uniform(-0.5, 0.5);
    }
    h0.push_back(h);
  }
  return h0;
}

int stack_size(const std::vector<GruLayerParams>& layers) {
  int n = 0;
  for (const auto& l : layers) {
    n += param_count(l);
  }
  for (const auto& l : layers) {
    n += l.hidden_dim();
  }
  return n;
}

// Layers first, then the initial hidden states, so the gradient of everything
// the recurrence depends on can be checked in one vector.
Vector flatten_stack(const std::vector<GruLayerParams>& layers, const std::vector<Vector>& h0) {
  Vector out(stack_size(layers));
  double* p = out.data();
  for (const auto& l : layers) {
    p = flatten_into(l, p);
  }
  for (const auto& h : h0) {
    for (int i = 0; i < h.size(); ++i) {
      *p++ = h[i];
    }
  }
  return out;
}

void unflatten_stack(const Vector& in, std::vector<GruLayerParams>& layers,
                     std::vector<Vector>& h0) {
  const double* p = in.data();
  for (auto& l : layers) {
    p = unflatten_from(l, p);
  }
  for (auto& h : h0) {
    for (int i = 0; i < h.size(); ++i) {
      h[i] = *p++;
    }
  }
}

Vector flatten_grads(const GruGrads& grads) {
  Vector out(stack_size(grads.layers));
  double* p = out.data();
  for (const auto& l : grads.layers) {
    p = flatten_into(l, p);
  }
  for (const auto& h : grads.h0) {
    for (int i = 0; i < h.size(); ++i) {
      *p++ = h[i];
    }
  }
  return out;
}

// Plain-loop re-implementation of the recurrence over std::vector<double>,
// sharing no code with gru_forward.
std::vector<std::vector<double>> reference_gru(const std::vector<GruLayerParams>& layers,
                                               const std::vector<Vector>& seq,
                                               const std::vector<Vector>& h0) {
  const int n_layers = static_cast<int>(layers.size());
  std::vector<std::vector<double>> h(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    h[l].assign(h0[l].data(), h0[l].data() + h0[l].size());
  }
  std::vector<std::vector<double>> top;
  for (const Vector& step : seq) {
    std::vector<double> x(step.data(), step.data() + step.size());
    for (int l = 0; l < n_layers; ++l) {
      const GruLayerParams& p = layers[l];
      const int hid = p.hidden_dim();
      const int in = p.input_dim();
      std::vector<double> z(hid), r(hid), g(hid), hn(hid);
      for (int j = 0; j < hid; ++j) {
        double az = p.b_z[j], ar = p.b_r[j];
        for (int i = 0; i < in; ++i) {
          az += p.W_z(j, i) * x[i];
          ar += p.W_r(j, i) * x[i];
        }
        for (int i = 0; i < hid; ++i) {
          az += p.U_z(j, i) * h[l][i];
          ar += p.U_r(j, i) * h[l][i];
        }
        z[j] = 1.0 / (1.0 + std::exp(-az));
        r[j] = 1.0 / (1.0 + std::exp(-ar));
      }
      for (int j = 0; j < hid; ++j) {
        double ag = p.b_h[j];
        for (int i = 0; i < in; ++i) {
          ag += p.W_h(j, i) * x[i];
        }
        for (int i = 0; i < hid; ++i) {
          ag += p.U_h(j, i) * (r[i] * h[l][i]);
        }
        g[j] = std::tanh(ag);
      }
      for (int j = 0; j < hid; ++j) {
        hn[j] = (1.0 - z[j]) * h[l][j] + z[j] * g[j];
      }
      h[l] = hn;
      x = h[l];
    }
    top.push_back(h[n_layers - 1]);
  }
  return top;
}

}  // namespace

TEST_CASE("gru forward with zero weights and zero state stays at zero") {
  std::vector<GruLayerParams> layers;
  layers.push_back(GruLayerParams::zeros(30, 15));
  layers.push_back(GruLayerParams::zeros(15, 15));
  std::vector<Vector> h0{Vector::Zero(15), Vector::Zero(15)};
  Rng rng(5);
  const auto seq = random_seq(30, 6, rng);
  const GruForward fwd = gru_forward(layers, seq, h0);
  REQUIRE(fwd.top_hidden.size() == 6);
  for (const Vector& h : fwd.top_hidden) {
    CHECK(h.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gru forward on a length-1 sequence yields one state per layer") {
  Rng rng(6);
  const auto layers = random_layers(30, 15, 2, rng);
  const auto h0 = random_h0(15, 2, rng);
  const auto seq = random_seq(30, 1, rng);
  const GruForward fwd = gru_forward(layers, seq, h0);
  CHECK(fwd.top_hidden.size() == 1);
  REQUIRE(fwd.cache.steps.size() == 2);
  CHECK(fwd.cache.steps[0].size() == 1);
  CHECK(fwd.cache.steps[1].size() == 1);
}

TEST_CASE("gru forward matches a straight-line recurrence") {
  Rng rng(7);
  const auto layers = random_layers(30, 15, 2, rng);
  const auto h0 = random_h0(15, 2, rng);
  const auto seq = random_seq(30, 8, rng);
  const GruForward fwd = gru_forward(layers, seq, h0);
  const auto ref = reference_gru(layers, seq, h0);
  REQUIRE(fwd.top_hidden.size() == ref.size());
  for (std::size_t t = 0; t < ref.size(); ++t) {
    for (int j = 0; j < 15; ++j) {
      CHECK(fwd.top_hidden[t][j] == doctest::Approx(ref[t][j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("gru backward returns zeros for zero upstream") {
  Rng rng(8);
  const auto layers = random_layers(30, 15, 2, rng);
  const auto h0 = random_h0(15, 2, rng);
  const auto seq = random_seq(30, 4, rng);
  const GruForward fwd = gru_forward(layers, seq, h0);
  const std::vector<Vector> upstream(4, Vector::Zero(15));
  const GruGrads grads = gru_backward(layers, fwd.cache, upstream);
  CHECK(flatten_grads(grads).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gru backward matches hand-derived single-step formulas") {
  const int in = 3, hid = 4;
  Rng rng(9);
  std::vector<GruLayerParams> layers{GruLayerParams::init(in, hid, rng)};
  const GruLayerParams& p = layers[0];
  std::vector<Vector> h0vec = random_h0(hid, 1, rng);
  const auto seq = random_seq(in, 1, rng);
  Vector u(hid);
  for (int j = 0; j < hid; ++j) {
    u[j] = rng.uniform(-1.0, 1.0);
  }

  const GruForward fwd = gru_forward(layers, seq, h0vec);
  const GruGrads grads = gru_backward(layers, fwd.cache, {u});

  // One cell, scalar by scalar.
  const double* x = seq[0].data();
  const double* h0 = h0vec[0].data();
  std::vector<double> z(hid), r(hid), g(hid);
  for (int j = 0; j < hid; ++j) {
    double az = p.b_z[j], ar = p.b_r[j];
    for (int i = 0; i < in; ++i) {
      az += p.W_z(j, i) * x[i];
      ar += p.W_r(j, i) * x[i];
    }
    for (int i = 0; i < hid; ++i) {
      az += p.U_z(j, i) * h0[i];
      ar += p.U_r(j, i) * h0[i];
    }
    z[j] = 1.0 / (1.0 + std::exp(-az));
    r[j] = 1.0 / (1.0 + std::exp(-ar));
  }
  for (int j = 0; j < hid; ++j) {
    double ag = p.b_h[j];
    for (int i = 0; i < in; ++i) {
      ag += p.W_h(j, i) * x[i];
    }
    for (int i = 0; i < hid; ++i) {
      ag += p.U_h(j, i) * (r[i] * h0[i]);
    }
    g[j] = std::tanh(ag);
  }
  std::vector<double> da_z(hid), da_g(hid), da_r(hid), dh0(hid, 0.0);
  for (int j = 0; j < hid; ++j) {
    da_z[j] = u[j] * (g[j] - h0[j]) * z[j] * (1.0 - z[j]);
    da_g[j] = u[j] * z[j] * (1.0 - g[j] * g[j]);
    dh0[j] = u[j] * (1.0 - z[j]);
  }
  for (int i = 0; i < hid; ++i) {
    double drh = 0.0;
    for (int j = 0; j < hid; ++j) {
      drh += p.U_h(j, i) * da_g[j];
    }
    da_r[i] = drh * h0[i] * r[i] * (1.0 - r[i]);
    dh0[i] += drh * r[i];
  }
  for (int i = 0; i < hid; ++i) {
    for (int j = 0; j < hid; ++j) {
      dh0[i] += p.U_z(j, i) * da_z[j] + p.U_r(j, i) * da_r[j];
    }
  }

  const GruLayerParams& d = grads.layers[0];
  for (int j = 0; j < hid; ++j) {
    for (int i = 0; i < in; ++i) {
      CHECK(d.W_z(j, i) == doctest::Approx(da_z[j] * x[i]).epsilon(1e-12));
      CHECK(d.W_r(j, i) == doctest::Approx(da_r[j] * x[i]).epsilon(1e-12));
      CHECK(d.W_h(j, i) == doctest::Approx(da_g[j] * x[i]).epsilon(1e-12));
    }
    for (int i = 0; i < hid; ++i) {
      CHECK(d.U_z(j, i) == doctest::Approx(da_z[j] * h0[i]).epsilon(1e-12));
      CHECK(d.U_r(j, i) == doctest::Approx(da_r[j] * h0[i]).epsilon(1e-12));
      CHECK(d.U_h(j, i) == doctest::Approx(da_g[j] * (r[i] * h0[i])).epsilon(1e-12));
    }
    CHECK(d.b_z[j] == doctest::Approx(da_z[j]).epsilon(1e-12));
    CHECK(d.b_r[j] == doctest::Approx(da_r[j]).epsilon(1e-12));
    CHECK(d.b_h[j] == doctest::Approx(da_g[j]).epsilon(1e-12));
    CHECK(grads.h0[0][j] == doctest::Approx(dh0[j]).epsilon(1e-12));
  }
}

namespace {

// Loss: fixed linear functional of all top hidden states. Its gradient wrt the
// top states is the coefficient vector itself, which makes the upstream for
// gru_backward exact.
double gru_fd_error(int n_layers, int steps, double eps, std::uint64_t seed) {
  const int in = n_layers == 1 ? 8 : 30;
  const int hid = n_layers == 1 ? 6 : 15;
  Rng rng(seed);
  auto layers = random_layers(in, hid, n_layers, rng);
  auto h0 = random_h0(hid, n_layers, rng);
  const auto seq = random_seq(in, steps, rng);
  std::vector<Vector> coeff;
  for (int t = 0; t < steps; ++t) {
    Vector c(hid);
    for (int j = 0; j < hid; ++j) {
      c[j] = rng.uniform(-1.0, 1.0);
    }
    coeff.push_back(c);
  }

  const GruForward fwd = gru_forward(layers, seq, h0);
  const GruGrads grads = gru_backward(layers, fwd.cache, coeff);
  const Vector analytic = flatten_grads(grads);
  const Vector at = flatten_stack(layers, h0);

  auto probe_layers = layers;
  auto probe_h0 = h0;
  const auto loss_fn = [&](const Vector& v) {
    unflatten_stack(v, probe_layers, probe_h0);
    const GruForward f = gru_forward(probe_layers, seq, probe_h0);
    double loss = 0.0;
    for (int t = 0; t < steps; ++t) {
      loss += coeff[t].dot(f.top_hidden[t]);
    }
    return loss;
  };
  return finite_diff_check(loss_fn, at, analytic, eps);
}

}  // namespace

TEST_CASE("gru backward agrees with central differences, one layer, five steps") {
  CHECK(gru_fd_error(1, 5, 1e-6, 21) < 1e-6);
}

TEST_CASE("gru backward agrees with central differences, two layers") {
  CHECK(gru_fd_error(2, 5, 1e-5, 22) < 1e-5);
  CHECK(gru_fd_error(2, 8, 1e-5, 23) < 1e-5);
}

TEST_CASE("slp score of zero parameters is zero") {
  const SlpParams p = SlpParams::zeros(15);
  CHECK(slp_score(p, Vector::Ones(15)) == 0.0);
}

TEST_CASE("slp saturates toward 1 with vanishing gradient") {
  SlpParams p = SlpParams::zeros(15);
  p.w = Vector::Ones(15);
  p.b = -3.0;
  const Vector h = Vector::Ones(15);
  const double s = slp_score(p, h);
  CHECK(s > 1.0 - 1e-6);
  CHECK(s < 1.0);
  const SlpBack back = slp_backward(p, h, s, 1.0);
  CHECK(back.dh.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(back.db) < 1e-8);
}

TEST_CASE("slp backward agrees with central differences") {
  Rng rng(14);
  const SlpParams p = SlpParams::init(15, rng);
  Vector h(15);
  for (int i = 0; i < 15; ++i) {
    h[i] = rng.uniform(-1.0, 1.0);
  }
  const double s = slp_score(p, h);
  const SlpBack back = slp_backward(p, h, s, 1.0);

  const int n = param_count(p);
  Vector at(n), analytic(n);
  flatten_into(p, at.data());
  SlpParams g;
  g.w = back.dw;
  g.b = back.db;
  flatten_into(g, analytic.data());

  SlpParams probe = p;
  const auto loss_fn = [&](const Vector& v) {
    unflatten_from(probe, v.data());
    return slp_score(probe, h);
  };
  CHECK(finite_diff_check(loss_fn, at, analytic, 1e-5) < 1e-8);
}

TEST_CASE("slp backward hidden-state gradient agrees with central differences") {
  Rng rng(16);
  const SlpParams p = SlpParams::init(15, rng);
  Vector h(15);
  for (int i = 0; i < 15; ++i) {
    h[i] = rng.uniform(-1.0, 1.0);
  }
  const double s = slp_score(p, h);
  const SlpBack back = slp_backward(p, h, s, 1.0);
  const auto loss_fn = [&](const Vector& v) { return slp_score(p, v); };
  CHECK(finite_diff_check(loss_fn, h, back.dh, 1e-5) < 1e-8);
}

TEST_CASE("mlp score of zero parameters is zero") {
  const MlpParams p = MlpParams::zeros({30, 15, 15, 1});
  CHECK(mlp_score(p, Vector::Ones(30)) == 0.0);
}

TEST_CASE("mlp scores actions independently") {
  Rng rng(17);
  const MlpParams p = MlpParams::init({30, 15, 15, 1}, rng);
  Vector a(30), b(30);
  for (int i = 0; i < 30; ++i) {
    a[i] = rng.uniform(-1.0, 1.0);
    b[i] = rng.uniform(-1.0, 1.0);
  }
  const double sa = mlp_score(p, a);
  const double sb = mlp_score(p, b);
  // Swapping the order of evaluation changes nothing: no state is carried.
  CHECK(mlp_score(p, b) == sb);
  CHECK(mlp_score(p, a) == sa);
  CHECK(sa != sb);
}

TEST_CASE("mlp backward agrees with central differences") {
  Rng rng(15);
  const MlpParams p = MlpParams::init({30, 15, 15, 1}, rng);
  Vector x(30);
  for (int i = 0; i < 30; ++i) {
    x[i] = rng.uniform(-1.0, 1.0);
  }
  MlpCache cache;
  mlp_score(p, x, &cache);
  const MlpGrads grads = mlp_backward(p, cache, 1.0);

  const int n = param_count(p);
  Vector at(n), analytic(n);
  flatten_into(p, at.data());
  MlpParams g;
  g.W = grads.dW;
  g.b = grads.db;
  flatten_into(g, analytic.data());

  MlpParams probe = p;
  const auto loss_fn = [&](const Vector& v) {
    unflatten_from(probe, v.data());
    return mlp_score(probe, x);
  };
  CHECK(finite_diff_check(loss_fn, at, analytic, 3e-5) < 1e-8);

  const auto input_fn = [&](const Vector& v) { return mlp_score(p, v); };
  CHECK(finite_diff_check(input_fn, x, grads.dx, 3e-5) < 1e-8);
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
  Vector params(4);
  params << 1.0, -2.0, 0.5, 3.0;
  const Vector before = params;
  AdamState state(4);
  adam_step(params, Vector::Zero(4), state, 0.01);
  CHECK(params == before);
  CHECK(state.t == 1);
}

TEST_CASE("adam first step moves against the gradient sign") {
  Vector params = Vector::Zero(4);
  Vector grads(4);
  grads << 0.3, -1.7, 0.002, -0.04;
  AdamState state(4);
  adam_step(params, grads, state, 0.01);
  for (int i = 0; i < 4; ++i) {
    CHECK(params[i] * grads[i] < 0.0);
  }
}

TEST_CASE("adam drives a quadratic bowl toward its minimum") {
  Vector x(1);
  x << 1.0;
  AdamState state(1);
  for (int step = 0; step < 2000; ++step) {
    Vector g(1);
    g << 2.0 * x[0];
    adam_step(x, g, state, 0.01);
  }
  CHECK(std::abs(x[0]) < 0.05);
}

TEST_CASE("finite differences are near-exact on a linear loss") {
  Rng rng(18);
  Vector w(10), x(10);
  for (int i = 0; i < 10; ++i) {
    w[i] = rng.uniform(-2.0, 2.0);
    x[i] = rng.uniform(-2.0, 2.0);
  }
  const auto loss_fn = [&](const Vector& v) { return w.dot(v); };
  CHECK(finite_diff_check(loss_fn, x, w, 1e-4) < 1e-10);
}

TEST_CASE("parameter flattening round-trips") {
  Rng rng(19);
  GruLayerParams gru = GruLayerParams::init(30, 15, rng);
  Vector buf(param_count(gru));
  flatten_into(gru, buf.data());
  GruLayerParams copy = GruLayerParams::zeros(30, 15);
  unflatten_from(copy, buf.data());
  CHECK(copy.W_z == gru.W_z);
  CHECK(copy.W_r == gru.W_r);
  CHECK(copy.W_h == gru.W_h);
  CHECK(copy.U_z == gru.U_z);
  CHECK(copy.U_r == gru.U_r);
  CHECK(copy.U_h == gru.U_h);
  CHECK(copy.b_z == gru.b_z);
  CHECK(copy.b_r == gru.b_r);
  CHECK(copy.b_h == gru.b_h);

  MlpParams mlp = MlpParams::init({30, 15, 15, 1}, rng);
  Vector mbuf(param_count(mlp));
  flatten_into(mlp, mbuf.data());
  MlpParams mcopy = MlpParams::zeros({30, 15, 15, 1});
  unflatten_from(mcopy, mbuf.data());
  for (std::size_t i = 0; i < mlp.W.size(); ++i) {
    CHECK(mcopy.W[i] == mlp.W[i]);
    CHECK(mcopy.b[i] == mlp.b[i]);
  }
}
