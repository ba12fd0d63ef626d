#include "icac/nets.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace icac {

const char* act_name(Act a) {
  switch (a) {
    case Act::relu: return "relu";
    case Act::tanh: return "tanh";
    case Act::linear: return "linear";
  }
  return "?";
}

Act act_from_name(const std::string& s) {
  if (s == "relu") return Act::relu;
  if (s == "tanh") return Act::tanh;
  if (s == "linear") return Act::linear;
  throw std::invalid_argument("unknown activation: " + s);
}

size_t DenseNet::param_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.w.a.size() + l.b.size();
  return n;
}

DenseNet make_net(const std::vector<int>& dims, const std::vector<Act>& acts, Rng& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw std::invalid_argument("make_net: dims/acts mismatch");
  DenseNet net;
  net.layers.resize(acts.size());
  for (size_t i = 0; i < acts.size(); ++i) {
    int fan_in = dims[i], fan_out = dims[i + 1];
    if (fan_in <= 0 || fan_out <= 0)
      throw std::invalid_argument("make_net: non-positive layer dimension");
    Layer& l = net.layers[i];
    l.w = Matrix(fan_out, fan_in);
    l.b.assign(fan_out, 0.0);
    l.act = acts[i];
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : l.w.a) v = rng.uniform(-limit, limit);
  }
  return net;
}

GradientSet GradientSet::zeros_like(const DenseNet& net) {
  GradientSet g;
  g.dw.reserve(net.layers.size());
  g.db.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    g.dw.emplace_back(l.w.rows, l.w.cols);
    g.db.emplace_back(l.b.size(), 0.0);
  }
  return g;
}

void GradientSet::set_zero() {
  for (auto& m : dw) std::fill(m.a.begin(), m.a.end(), 0.0);
  for (auto& v : db) std::fill(v.begin(), v.end(), 0.0);
}

void GradientSet::scale(double s) {
  for (auto& m : dw)
    for (double& v : m.a) v *= s;
  for (auto& v : db)
    for (double& x : v) x *= s;
}

void GradientSet::reset_like(const DenseNet& net) {
  dw.resize(net.layers.size());
  db.resize(net.layers.size());
  for (size_t li = 0; li < net.layers.size(); ++li) {
    dw[li].reshape(net.layers[li].w.rows, net.layers[li].w.cols);
    std::fill(dw[li].a.begin(), dw[li].a.end(), 0.0);
    db[li].assign(net.layers[li].b.size(), 0.0);
  }
}

namespace {

// Four independent accumulators keep the FP pipeline busy; plain reductions
// serialize on the add latency.
inline double dot(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double apply_act(Act a, double v) {
  switch (a) {
    case Act::relu: return v > 0.0 ? v : 0.0;
    case Act::tanh: return std::tanh(v);
    case Act::linear: return v;
  }
  return v;
}

// Derivative expressed through the post-activation value.
inline double act_grad(Act a, double post) {
  switch (a) {
    case Act::relu: return post > 0.0 ? 1.0 : 0.0;
    case Act::tanh: return 1.0 - post * post;
    case Act::linear: return 1.0;
  }
  return 1.0;
}

void check_input_dim(const DenseNet& net, size_t n, const char* who) {
  if (net.layers.empty()) throw std::invalid_argument(std::string(who) + ": empty net");
  if (static_cast<int>(n) != net.input_dim())
    throw std::invalid_argument(std::string(who) + ": input length " + std::to_string(n) +
                                " does not match net input dim " +
                                std::to_string(net.input_dim()));
}

}  // namespace

Vec forward(const DenseNet& net, const Vec& in) {
  check_input_dim(net, in.size(), "forward");
  Vec cur = in, next;
  for (const auto& l : net.layers) {
    next.assign(l.w.rows, 0.0);
    for (int o = 0; o < l.w.rows; ++o)
      next[o] = apply_act(l.act, l.b[o] + dot(l.w.row(o), cur.data(), l.w.cols));
    cur.swap(next);
  }
  return cur;
}

Vec forward(const DenseNet& net, const Vec& in, ForwardTrace& trace) {
  check_input_dim(net, in.size(), "forward");
  trace.x.assign(net.layers.size() + 1, Vec());
  trace.x[0] = in;
  for (size_t li = 0; li < net.layers.size(); ++li) {
    const Layer& l = net.layers[li];
    const Vec& cur = trace.x[li];
    Vec& next = trace.x[li + 1];
    next.assign(l.w.rows, 0.0);
    for (int o = 0; o < l.w.rows; ++o)
      next[o] = apply_act(l.act, l.b[o] + dot(l.w.row(o), cur.data(), l.w.cols));
  }
  return trace.x.back();
}

Vec backward(const DenseNet& net, const ForwardTrace& trace, const Vec& dy,
             GradientSet& grads) {
  if (trace.x.size() != net.layers.size() + 1)
    throw std::invalid_argument("backward: trace does not match net");
  if (dy.size() != static_cast<size_t>(net.output_dim()))
    throw std::invalid_argument("backward: dy length mismatch");
  Vec cur = dy;
  for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
    const Layer& l = net.layers[li];
    const Vec& x = trace.x[li];
    const Vec& post = trace.x[li + 1];
    // da = dy (*) act'(pre)
    Vec da(l.w.rows);
    for (int o = 0; o < l.w.rows; ++o) da[o] = cur[o] * act_grad(l.act, post[o]);
    Matrix& dw = grads.dw[li];
    Vec& db = grads.db[li];
    Vec dx(l.w.cols, 0.0);
    for (int o = 0; o < l.w.rows; ++o) {
      const double g = da[o];
      db[o] += g;
      double* dwr = dw.row(o);
      const double* wr = l.w.row(o);
      for (int i = 0; i < l.w.cols; ++i) {
        dwr[i] += g * x[i];
        dx[i] += g * wr[i];
      }
    }
    cur.swap(dx);
  }
  return cur;
}

MseResult mse_and_grad(const DenseNet& net, const Vec& x, const Vec& target) {
  if (target.size() != static_cast<size_t>(net.output_dim()))
    throw std::invalid_argument("mse_and_grad: target length mismatch");
  ForwardTrace trace;
  Vec y = forward(net, x, trace);
  for (size_t li = 1; li < trace.x.size(); ++li)
    for (double v : trace.x[li])
      if (!std::isfinite(v))
        throw std::runtime_error("mse_and_grad: non-finite value at layer " +
                                 std::to_string(li - 1));
  MseResult r;
  r.grads = GradientSet::zeros_like(net);
  Vec dy(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    double d = y[i] - target[i];
    r.loss += d * d;
    dy[i] = 2.0 * d;
  }
  backward(net, trace, dy, r.grads);
  return r;
}

AdamState AdamState::for_net(const DenseNet& net, double lr_) {
  AdamState s;
  s.lr = lr_;
  for (const auto& l : net.layers) {
    s.mw.emplace_back(l.w.rows, l.w.cols);
    s.vw.emplace_back(l.w.rows, l.w.cols);
    s.mb.emplace_back(l.b.size(), 0.0);
    s.vb.emplace_back(l.b.size(), 0.0);
  }
  return s;
}

namespace {

inline void adam_apply(double* p, const double* g, double* m, double* v, size_t n,
                       const AdamState& s, double bc1, double bc2) {
  for (size_t i = 0; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

}  // namespace

void adam_update(DenseNet& net, const GradientSet& grads, AdamState& state) {
  if (grads.dw.size() != net.layers.size() || state.mw.size() != net.layers.size())
    throw std::invalid_argument("adam_update: shape mismatch");
  state.t += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t li = 0; li < net.layers.size(); ++li) {
    Layer& l = net.layers[li];
    if (grads.dw[li].rows != l.w.rows || grads.dw[li].cols != l.w.cols ||
        grads.db[li].size() != l.b.size())
      throw std::invalid_argument("adam_update: gradient shape mismatch at layer " +
                                  std::to_string(li));
    adam_apply(l.w.a.data(), grads.dw[li].a.data(), state.mw[li].a.data(),
               state.vw[li].a.data(), l.w.a.size(), state, bc1, bc2);
    adam_apply(l.b.data(), grads.db[li].data(), state.mb[li].data(),
               state.vb[li].data(), l.b.size(), state, bc1, bc2);
  }
}

void soft_update_params(DenseNet& target, const DenseNet& src, double tau) {
  if (target.layers.size() != src.layers.size())
    throw std::invalid_argument("soft_update_params: incongruent nets");
  for (size_t li = 0; li < src.layers.size(); ++li) {
    auto& t = target.layers[li];
    const auto& s = src.layers[li];
    if (t.w.a.size() != s.w.a.size() || t.b.size() != s.b.size())
      throw std::invalid_argument("soft_update_params: incongruent layer " +
                                  std::to_string(li));
    for (size_t i = 0; i < s.w.a.size(); ++i)
      t.w.a[i] = tau * s.w.a[i] + (1.0 - tau) * t.w.a[i];
    for (size_t i = 0; i < s.b.size(); ++i)
      t.b[i] = tau * s.b[i] + (1.0 - tau) * t.b[i];
  }
}

uint64_t param_hash(const DenseNet& net) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto eat = [&h](const double* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      uint64_t bits;
      std::memcpy(&bits, &p[i], sizeof bits);
      for (int k = 0; k < 8; ++k) {
        h ^= (bits >> (8 * k)) & 0xff;
        h *= 0x100000001b3ull;
      }
    }
  };
  for (const auto& l : net.layers) {
    eat(l.w.a.data(), l.w.a.size());
    eat(l.b.data(), l.b.size());
  }
  return h;
}

bool params_finite(const DenseNet& net) {
  for (const auto& l : net.layers) {
    for (double v : l.w.a)
      if (!std::isfinite(v)) return false;
    for (double v : l.b)
      if (!std::isfinite(v)) return false;
  }
  return true;
}

// Format:
//   densenet 1
//   <n_layers>
//   <out> <in> <activation>      (one line per layer)
//   <parameters...>              (w row-major then b, layer by layer, %.17g)
void save_net(const DenseNet& net, std::ostream& os) {
  os << "densenet 1\n" << net.layers.size() << "\n";
  for (const auto& l : net.layers)
    os << l.w.rows << " " << l.w.cols << " " << act_name(l.act) << "\n";
  os.precision(17);
  for (const auto& l : net.layers) {
    for (size_t i = 0; i < l.w.a.size(); ++i) os << l.w.a[i] << "\n";
    for (size_t i = 0; i < l.b.size(); ++i) os << l.b[i] << "\n";
  }
}

DenseNet load_net(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "densenet" || version != 1)
    throw std::runtime_error("load_net: bad header");
  size_t n_layers = 0;
  is >> n_layers;
  DenseNet net;
  net.layers.resize(n_layers);
  int prev_out = -1;
  for (auto& l : net.layers) {
    int rows, cols;
    std::string act;
    is >> rows >> cols >> act;
    if (!is || rows <= 0 || cols <= 0) throw std::runtime_error("load_net: bad layer header");
    if (prev_out >= 0 && cols != prev_out)
      throw std::runtime_error("load_net: layer dimensions do not chain");
    prev_out = rows;
    l.w = Matrix(rows, cols);
    l.b.assign(rows, 0.0);
    l.act = act_from_name(act);
  }
  for (auto& l : net.layers) {
    for (size_t i = 0; i < l.w.a.size(); ++i) is >> l.w.a[i];
    for (size_t i = 0; i < l.b.size(); ++i) is >> l.b[i];
  }
  if (!is) throw std::runtime_error("load_net: truncated parameter block");
  return net;
}

void save_net_file(const DenseNet& net, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_net_file: cannot open " + path);
  save_net(net, f);
}

DenseNet load_net_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_net_file: cannot open " + path);
  return load_net(f);
}

namespace {

void layer_forward_batch(const Layer& l, const Matrix& x, Matrix& y) {
  y.reshape(x.rows, l.w.rows);
  for (int r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    double* yr = y.row(r);
    for (int o = 0; o < l.w.rows; ++o)
      yr[o] = apply_act(l.act, l.b[o] + dot(l.w.row(o), xr, l.w.cols));
  }
}

}  // namespace

Matrix forward_batch(const DenseNet& net, const Matrix& in) {
  check_input_dim(net, in.cols, "forward_batch");
  // Ping-pong scratch; retaining per-layer activations is the traced path.
  static thread_local Matrix a, b;
  a = in;
  for (const auto& l : net.layers) {
    layer_forward_batch(l, a, b);
    std::swap(a, b);
  }
  return a;
}

const Matrix& forward_batch(const DenseNet& net, const Matrix& in, BatchTrace& trace) {
  check_input_dim(net, in.cols, "forward_batch");
  trace.x.resize(net.layers.size() + 1);
  trace.x[0] = in;
  for (size_t li = 0; li < net.layers.size(); ++li)
    layer_forward_batch(net.layers[li], trace.x[li], trace.x[li + 1]);
  return trace.x.back();
}

Matrix backward_batch(const DenseNet& net, const BatchTrace& trace, const Matrix& dy,
                      GradientSet& grads, bool want_input_grad) {
  if (trace.x.size() != net.layers.size() + 1)
    throw std::invalid_argument("backward_batch: trace does not match net");
  static thread_local Matrix cur, dx;
  cur = dy;
  for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
    const Layer& l = net.layers[li];
    const Matrix& x = trace.x[li];
    const Matrix& post = trace.x[li + 1];
    const bool need_dx = li > 0 || want_input_grad;
    dx.reshape(x.rows, l.w.cols);
    std::fill(dx.a.begin(), dx.a.end(), 0.0);
    Matrix& dw = grads.dw[li];
    Vec& db = grads.db[li];
    for (int r = 0; r < x.rows; ++r) {
      const double* xr = x.row(r);
      const double* pr = post.row(r);
      const double* cr = cur.row(r);
      double* dxr = dx.row(r);
      for (int o = 0; o < l.w.rows; ++o) {
        const double g = cr[o] * act_grad(l.act, pr[o]);
        if (g == 0.0) continue;
        db[o] += g;
        double* dwr = dw.row(o);
        const double* wr = l.w.row(o);
        if (need_dx) {
          for (int i = 0; i < l.w.cols; ++i) {
            dwr[i] += g * xr[i];
            dxr[i] += g * wr[i];
          }
        } else {
          for (int i = 0; i < l.w.cols; ++i) dwr[i] += g * xr[i];
        }
      }
    }
    std::swap(cur, dx);
  }
  if (!want_input_grad) return Matrix();
  return cur;
}

}  // namespace icac
