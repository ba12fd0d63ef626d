#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "icac/cacla.hpp"
#include "icac/representation.hpp"
#include "test_util.hpp"

using namespace icac;

namespace {

void zero_net(DenseNet& net) {
  for (auto& l : net.layers) {
    std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

PixelTransition make_pt(const std::vector<float>& s, double r,
                        const std::vector<float>& s_next, bool terminal = false) {
  PixelTransition t;
  t.s = s;
  t.a = {0.0, 0.0};
  t.r = r;
  t.s_next = s_next;
  t.terminal = terminal;
  return t;
}

}  // namespace

TEST_CASE("encode: deterministic, 16-dimensional, input-validated") {
  Rng rng(21);
  auto ed = make_encoder_decoder(256, 16, 64, 0.1, 1.0, 1e-3, rng);
  Vec obs(256, 0.25);
  Vec phi1 = encode(ed, obs);
  Vec phi2 = encode(ed, obs);
  CHECK(phi1.size() == 16);
  CHECK(phi1 == phi2);  // identical observations, identical latents
  CHECK_THROWS_AS(encode(ed, Vec(100, 0.0)), std::invalid_argument);
}

TEST_CASE("combined loss: hand-arranged L_rec=2, L_critic=3 gives 3.2") {
  Rng rng(22);
  auto ed = make_encoder_decoder(256, 16, 64, 0.1, 1.0, 1e-3, rng);
  zero_net(ed.encoder);
  zero_net(ed.decoder);
  ed.target_encoder = ed.encoder;
  auto critic = make_net({16, 1}, {Act::linear}, rng);
  zero_net(critic);
  auto target_critic = critic;

  // Zeroed decoder reconstructs 0.5 everywhere; pick s with
  // sum_j (0.5 - s_j)^2 = 2 and r = sqrt(3) so the critic term is 3.
  float sv = 0.5f + static_cast<float>(std::sqrt(2.0 / 256.0));
  auto tr = make_pt(std::vector<float>(256, sv), std::sqrt(3.0),
                    std::vector<float>(256, 0.5f));
  auto res = combined_loss_eval(ed, critic, target_critic, 0.99, {&tr}, nullptr, nullptr);
  CHECK(res.rec == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(res.critic == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(res.combined == doctest::Approx(3.2).epsilon(1e-5));
}

TEST_CASE("combined loss: perfect autoencoder, zero rewards, zero critics") {
  Rng rng(23);
  auto ed = make_encoder_decoder(64, 8, 16, 0.1, 1.0, 1e-3, rng);
  zero_net(ed.encoder);
  zero_net(ed.decoder);
  ed.target_encoder = ed.encoder;
  auto critic = make_net({8, 1}, {Act::linear}, rng);
  zero_net(critic);
  // Constant 0.5 observation is exactly what the zeroed decoder emits.
  auto tr = make_pt(std::vector<float>(64, 0.5f), 0.0, std::vector<float>(64, 0.5f));
  auto res = combined_loss_eval(ed, critic, critic, 0.99, {&tr}, nullptr, nullptr);
  CHECK(res.rec == doctest::Approx(0.0));
  CHECK(res.critic == doctest::Approx(0.0));
  CHECK(res.combined == doctest::Approx(0.0));
}

TEST_CASE("combined loss: exact additivity on random batches") {
  Rng rng(24);
  auto ed = make_encoder_decoder(32, 6, 12, 0.37, 2.5, 1e-3, rng);
  auto critic = make_net({6, 8, 1}, {Act::relu, Act::linear}, rng);
  auto target_critic = make_net({6, 8, 1}, {Act::relu, Act::linear}, rng);
  std::vector<PixelTransition> storage;
  std::vector<const PixelTransition*> batch;
  for (int i = 0; i < 7; ++i) {
    std::vector<float> s(32), sn(32);
    for (auto& v : s) v = static_cast<float>(rng.uniform());
    for (auto& v : sn) v = static_cast<float>(rng.uniform());
    storage.push_back(make_pt(s, rng.uniform(-2.0, 2.0), sn, i == 3));
  }
  for (const auto& t : storage) batch.push_back(&t);
  auto res = combined_loss_eval(ed, critic, target_critic, 0.9, batch, nullptr, nullptr);
  CHECK(res.combined ==
        doctest::Approx(0.37 * res.rec + 2.5 * res.critic).epsilon(1e-14));
}

TEST_CASE("combined loss: empty batch is a zero-loss no-op") {
  Rng rng(25);
  auto ed = make_encoder_decoder(16, 4, 8, 0.1, 1.0, 1e-3, rng);
  auto critic = make_net({4, 1}, {Act::linear}, rng);
  auto h_enc = param_hash(ed.encoder);
  auto res = combined_loss_step(ed, critic, critic, 0.99, {});
  CHECK(res.combined == 0.0);
  CHECK(param_hash(ed.encoder) == h_enc);
}

TEST_CASE("combined loss: encoder gradient matches finite differences") {
  Rng rng(26);
  auto ed = make_encoder_decoder(12, 3, 6, 0.4, 1.3, 1e-3, rng);
  auto critic = make_net({3, 5, 1}, {Act::tanh, Act::linear}, rng);
  auto target_critic = make_net({3, 5, 1}, {Act::tanh, Act::linear}, rng);
  const double gamma = 0.95;

  std::vector<PixelTransition> storage;
  for (int i = 0; i < 3; ++i) {
    std::vector<float> s(12), sn(12);
    for (auto& v : s) v = static_cast<float>(rng.uniform());
    for (auto& v : sn) v = static_cast<float>(rng.uniform());
    storage.push_back(make_pt(s, rng.uniform(-1.0, 1.0), sn));
  }
  std::vector<const PixelTransition*> batch;
  for (const auto& t : storage) batch.push_back(&t);

  GradientSet enc_grads, dec_grads;
  combined_loss_eval(ed, critic, target_critic, gamma, batch, &enc_grads, &dec_grads);

  auto loss_fn = [&] {
    double total = 0.0;
    for (const auto* tr : batch) {
      Vec s(tr->s.begin(), tr->s.end());
      Vec sn(tr->s_next.begin(), tr->s_next.end());
      Vec phi = encode(ed, s);
      Vec shat = decode(ed, phi);
      double rec = testutil::sq_err(shat, s);
      double target = tr->r;
      if (!tr->terminal)
        target += gamma * forward(target_critic, forward(ed.target_encoder, sn))[0];
      double err = forward(critic, phi)[0] - target;
      total += 0.4 * rec + 1.3 * err * err;
    }
    return total / batch.size();
  };
  auto fd_enc = testutil::finite_diff(ed.encoder, loss_fn);
  CHECK(testutil::max_rel_err(enc_grads, fd_enc) < 1e-4);
  auto fd_dec = testutil::finite_diff(ed.decoder, loss_fn);
  CHECK(testutil::max_rel_err(dec_grads, fd_dec) < 1e-4);
}

TEST_CASE("reconstruction-only training halves L_rec on a fixed batch") {
  Rng rng(27);
  auto ed = make_encoder_decoder(256, 16, 64, 1.0, 0.0, 1e-3, rng);
  auto critic = make_net({16, 1}, {Act::linear}, rng);

  // 32 smooth two-parameter observations, well within the bottleneck.
  std::vector<PixelTransition> storage;
  for (int i = 0; i < 32; ++i) {
    double c = rng.uniform(3.0, 13.0), w = rng.uniform(1.0, 3.0);
    std::vector<float> s(256);
    for (int j = 0; j < 256; ++j) {
      double d = (j % 16) - c;
      s[j] = static_cast<float>(std::exp(-d * d / (2.0 * w * w)));
    }
    storage.push_back(make_pt(s, 0.0, s));
  }
  std::vector<const PixelTransition*> batch;
  for (const auto& t : storage) batch.push_back(&t);

  double first = combined_loss_step(ed, critic, critic, 0.99, batch).rec;
  double last = first;
  for (int step = 1; step < 500; ++step)
    last = combined_loss_step(ed, critic, critic, 0.99, batch).rec;
  CHECK(last <= 0.5 * first);
}

TEST_CASE("decode keeps reconstructions inside [0,1]") {
  Rng rng(28);
  auto ed = make_encoder_decoder(32, 4, 8, 0.1, 1.0, 1e-3, rng);
  for (int i = 0; i < 50; ++i) {
    Vec phi = testutil::random_vec(4, rng, -10.0, 10.0);
    for (double v : decode(ed, phi)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}
