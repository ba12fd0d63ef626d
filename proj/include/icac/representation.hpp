#pragma once

#include <vector>

#include "icac/nets.hpp"
#include "icac/replay.hpp"
#include "icac/rng.hpp"

namespace icac {

// Latent state representation. The decoder's tanh output is mapped affinely
// onto [0,1] so reconstructions live in observation range. target_encoder
// tracks the encoder at the critic's soft-update rate and backs the value
// targets in the combined loss.
struct EncoderDecoder {
  DenseNet encoder;
  DenseNet decoder;
  DenseNet target_encoder;
  AdamState enc_opt;
  AdamState dec_opt;
  double lambda_rec = 0.1;
  double lambda_critic = 1.0;
  int obs_dim = 0;
  int latent_dim = 0;
};

// Encoder obs->hidden->latent->latent (relu, relu, then linear or tanh);
// decoder mirrors it back to observation range. A tanh latent bounds the
// space the map and local models work in, which keeps the node-creation
// threshold meaningful while the encoder trains.
EncoderDecoder make_encoder_decoder(int obs_dim, int latent_dim, int hidden,
                                    double lambda_rec, double lambda_critic,
                                    double lr, Rng& rng, bool tanh_latent = true);

Vec encode(const EncoderDecoder& ed, const Vec& obs);
Vec decode(const EncoderDecoder& ed, const Vec& phi);

struct CombinedLossResult {
  double rec = 0.0;       // mean ||g(f(s)) - s||^2
  double critic = 0.0;    // mean (y_t - V(f(s)))^2
  double combined = 0.0;  // lambda_rec*rec + lambda_critic*critic
  std::vector<double> abs_td;
};

// Losses and exact gradients of the batch-mean combined loss w.r.t. encoder
// and decoder parameters (either sink may be null). Pure evaluation.
CombinedLossResult combined_loss_eval(const EncoderDecoder& ed, const DenseNet& critic,
                                      const DenseNet& target_critic, double gamma,
                                      const std::vector<const PixelTransition*>& batch,
                                      GradientSet* enc_grads, GradientSet* dec_grads);

// One Adam step on encoder and decoder only, driven by the gradient of the
// combined loss; the critic reads f(s) but its parameters are not updated
// here. Targets y_t go through the target encoder/critic pair, masked at
// terminals. Empty batch reports zeros and changes nothing.
CombinedLossResult combined_loss_step(EncoderDecoder& ed, const DenseNet& critic,
                                      const DenseNet& target_critic, double gamma,
                                      const std::vector<const PixelTransition*>& batch);

}  // namespace icac
