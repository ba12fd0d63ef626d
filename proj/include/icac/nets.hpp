#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "icac/rng.hpp"

namespace icac {

using Vec = std::vector<double>;

enum class Act { relu, tanh, linear };

const char* act_name(Act a);
Act act_from_name(const std::string& s);

// Row-major dense matrix.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  // Resize reusing existing storage; contents unspecified afterwards.
  void reshape(int r, int c) {
    rows = r;
    cols = c;
    a.resize(static_cast<size_t>(r) * c);
  }
};

struct Layer {
  Matrix w;  // out x in
  Vec b;     // out
  Act act = Act::linear;
};

// Dense feedforward network. Plain value type: copy to snapshot, assign to
// restore. Layer dimensions must chain (checked on construction and load).
struct DenseNet {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().w.cols; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().w.rows; }
  size_t param_count() const;
};

// dims = {in, h1, ..., out}; acts has one entry per layer.
// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
DenseNet make_net(const std::vector<int>& dims, const std::vector<Act>& acts, Rng& rng);

// Per-parameter array mirroring a DenseNet's shape.
struct GradientSet {
  std::vector<Matrix> dw;
  std::vector<Vec> db;

  static GradientSet zeros_like(const DenseNet& net);
  void set_zero();
  void scale(double s);

  // Reshape-and-zero in place, reusing storage when shapes already match.
  void reset_like(const DenseNet& net);
};

// Post-activation values per layer; x[0] is the input. Enough to run the
// backward pass for relu/tanh/linear.
struct ForwardTrace {
  std::vector<Vec> x;
};

Vec forward(const DenseNet& net, const Vec& in);
Vec forward(const DenseNet& net, const Vec& in, ForwardTrace& trace);

// dy = dLoss/d(output). Accumulates parameter gradients into `grads`,
// returns dLoss/d(input).
Vec backward(const DenseNet& net, const ForwardTrace& trace, const Vec& dy,
             GradientSet& grads);

struct MseResult {
  double loss = 0.0;  // squared L2 error, not averaged
  GradientSet grads;
};

// Exact reverse-mode gradient of ||f(x) - target||^2 w.r.t. every parameter.
MseResult mse_and_grad(const DenseNet& net, const Vec& x, const Vec& target);

struct AdamState {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int64_t t = 0;
  std::vector<Matrix> mw, vw;
  std::vector<Vec> mb, vb;

  static AdamState for_net(const DenseNet& net, double lr);
};

// Bias-corrected Adam step, in place; increments state.t.
void adam_update(DenseNet& net, const GradientSet& grads, AdamState& state);

// p_target <- tau*p + (1-tau)*p_target for every parameter.
void soft_update_params(DenseNet& target, const DenseNet& src, double tau);

// FNV-1a over the raw parameter bytes; used by gating and isolation audits.
uint64_t param_hash(const DenseNet& net);

bool params_finite(const DenseNet& net);

// Versioned text checkpoint format, see save_net in nets.cpp for the layout.
void save_net(const DenseNet& net, std::ostream& os);
DenseNet load_net(std::istream& is);
void save_net_file(const DenseNet& net, const std::string& path);
DenseNet load_net_file(const std::string& path);

// Batched passes, one sample per row. Used on the training hot path.
struct BatchTrace {
  std::vector<Matrix> x;
};

Matrix forward_batch(const DenseNet& net, const Matrix& in);
// Returns a reference to the output activation held by the trace.
const Matrix& forward_batch(const DenseNet& net, const Matrix& in, BatchTrace& trace);
// want_input_grad = false skips the first layer's input-gradient work (the
// returned matrix is then empty).
Matrix backward_batch(const DenseNet& net, const BatchTrace& trace, const Matrix& dy,
                      GradientSet& grads, bool want_input_grad = true);

}  // namespace icac
