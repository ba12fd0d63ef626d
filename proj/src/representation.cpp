#include "icac/representation.hpp"

#include <cmath>
#include <stdexcept>

namespace icac {

EncoderDecoder make_encoder_decoder(int obs_dim, int latent_dim, int hidden,
                                    double lambda_rec, double lambda_critic,
                                    double lr, Rng& rng, bool tanh_latent) {
  if (lambda_rec < 0.0 || lambda_critic < 0.0)
    throw std::invalid_argument("make_encoder_decoder: negative loss weight");
  EncoderDecoder ed;
  ed.obs_dim = obs_dim;
  ed.latent_dim = latent_dim;
  ed.lambda_rec = lambda_rec;
  ed.lambda_critic = lambda_critic;
  ed.encoder = make_net({obs_dim, hidden, latent_dim, latent_dim},
                        {Act::relu, Act::relu, tanh_latent ? Act::tanh : Act::linear}, rng);
  ed.decoder = make_net({latent_dim, latent_dim, hidden, obs_dim},
                        {Act::relu, Act::relu, Act::tanh}, rng);
  ed.target_encoder = ed.encoder;
  ed.enc_opt = AdamState::for_net(ed.encoder, lr);
  ed.dec_opt = AdamState::for_net(ed.decoder, lr);
  return ed;
}

Vec encode(const EncoderDecoder& ed, const Vec& obs) {
  if (static_cast<int>(obs.size()) != ed.obs_dim)
    throw std::invalid_argument("encode: observation length " +
                                std::to_string(obs.size()) + ", expected " +
                                std::to_string(ed.obs_dim));
  return forward(ed.encoder, obs);
}

Vec decode(const EncoderDecoder& ed, const Vec& phi) {
  Vec y = forward(ed.decoder, phi);
  for (double& v : y) v = 0.5 * (v + 1.0);
  return y;
}

namespace {

void pack_obs(const std::vector<const PixelTransition*>& batch, bool next, int dim,
              Matrix& m) {
  m.reshape(static_cast<int>(batch.size()), dim);
  for (size_t i = 0; i < batch.size(); ++i) {
    const auto& src = next ? batch[i]->s_next : batch[i]->s;
    if (static_cast<int>(src.size()) != dim)
      throw std::invalid_argument("pixel batch: observation length mismatch");
    double* row = m.row(static_cast<int>(i));
    for (int j = 0; j < dim; ++j) row[j] = static_cast<double>(src[j]);
  }
}

// Per-thread workspace; the combined step runs tens of thousands of times
// per run and the 64x256 buffers are above the allocator's mmap threshold.
struct ReprScratch {
  Matrix x, xn, dy, dv;
  BatchTrace tr_enc, tr_dec, tr_crit;
  GradientSet critic_scratch;
};

ReprScratch& repr_scratch() {
  static thread_local ReprScratch ws;
  return ws;
}

}  // namespace

CombinedLossResult combined_loss_eval(const EncoderDecoder& ed, const DenseNet& critic,
                                      const DenseNet& target_critic, double gamma,
                                      const std::vector<const PixelTransition*>& batch,
                                      GradientSet* enc_grads, GradientSet* dec_grads) {
  CombinedLossResult res;
  if (batch.empty()) return res;
  const int k = static_cast<int>(batch.size());
  ReprScratch& ws = repr_scratch();

  pack_obs(batch, false, ed.obs_dim, ws.x);
  pack_obs(batch, true, ed.obs_dim, ws.xn);

  const Matrix& phi = forward_batch(ed.encoder, ws.x, ws.tr_enc);
  const Matrix& y = forward_batch(ed.decoder, phi, ws.tr_dec);
  const Matrix& v = forward_batch(critic, phi, ws.tr_crit);
  Matrix vn = forward_batch(target_critic, forward_batch(ed.target_encoder, ws.xn));

  // Reconstruction: s_hat = 0.5*(y+1), loss per sample summed over pixels.
  ws.dy.reshape(k, ed.obs_dim);
  for (int i = 0; i < k; ++i) {
    const double* xr = ws.x.row(i);
    const double* yr = y.row(i);
    double* dr = ws.dy.row(i);
    double rec = 0.0;
    for (int j = 0; j < ed.obs_dim; ++j) {
      double err = 0.5 * (yr[j] + 1.0) - xr[j];
      rec += err * err;
      dr[j] = ed.lambda_rec * err / k;  // 2*err*0.5, mean over the batch
    }
    res.rec += rec;
  }

  // Value prediction against the target pair.
  ws.dv.reshape(k, 1);
  res.abs_td.resize(k);
  for (int i = 0; i < k; ++i) {
    double target = batch[i]->r;
    if (!batch[i]->terminal) target += gamma * vn.at(i, 0);
    double err = v.at(i, 0) - target;
    res.critic += err * err;
    res.abs_td[i] = std::fabs(err);
    ws.dv.at(i, 0) = 2.0 * ed.lambda_critic * err / k;
  }

  res.rec /= k;
  res.critic /= k;
  res.combined = ed.lambda_rec * res.rec + ed.lambda_critic * res.critic;

  if (!enc_grads && !dec_grads) return res;

  GradientSet drop;
  GradientSet& dec_sink = dec_grads ? *dec_grads : drop;
  dec_sink.reset_like(ed.decoder);
  Matrix dphi = backward_batch(ed.decoder, ws.tr_dec, ws.dy, dec_sink);

  if (enc_grads) {
    // The critic contributes gradient to the encoder but is not updated here.
    ws.critic_scratch.reset_like(critic);
    Matrix dphi_c = backward_batch(critic, ws.tr_crit, ws.dv, ws.critic_scratch);
    for (size_t i = 0; i < dphi.a.size(); ++i) dphi.a[i] += dphi_c.a[i];
    enc_grads->reset_like(ed.encoder);
    backward_batch(ed.encoder, ws.tr_enc, dphi, *enc_grads, /*want_input_grad=*/false);
  }
  return res;
}

CombinedLossResult combined_loss_step(EncoderDecoder& ed, const DenseNet& critic,
                                      const DenseNet& target_critic, double gamma,
                                      const std::vector<const PixelTransition*>& batch) {
  if (batch.empty()) return {};
  static thread_local GradientSet enc_grads, dec_grads;
  auto res = combined_loss_eval(ed, critic, target_critic, gamma, batch, &enc_grads,
                                &dec_grads);
  adam_update(ed.encoder, enc_grads, ed.enc_opt);
  adam_update(ed.decoder, dec_grads, ed.dec_opt);
  return res;
}

}  // namespace icac
