#pragma once

// Helpers shared by the GAN trainers.

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fingan/error.hpp"
#include "fingan/generator_model.hpp"
#include "fingan/nn.hpp"
#include "fingan/random.hpp"

namespace fingan::detail {

// Endless stream of row batches. Reshuffles after each pass; the last batch of
// a pass may be short.
class BatchStream {
 public:
  BatchStream(std::size_t rows, std::size_t batch, Rng& rng)
      : order_(rows), batch_(batch), rng_(rng) {
    std::iota(order_.begin(), order_.end(), 0);
    rng_.shuffle(order_);
  }

  std::vector<std::size_t> next() {
    if (pos_ >= order_.size()) {
      rng_.shuffle(order_);
      pos_ = 0;
    }
    const std::size_t end = std::min(order_.size(), pos_ + batch_);
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
    pos_ = end;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  Rng& rng_;
};

inline nn::Matrix gather_rows(const nn::Matrix& data, const std::vector<std::size_t>& idx) {
  nn::Matrix out(static_cast<Eigen::Index>(idx.size()), data.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

inline nn::Matrix latent_batch(Eigen::Index rows, std::size_t dim, Rng& rng) {
  nn::Matrix z(rows, static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c) z(r, c) = rng.normal();
  return z;
}

inline nn::Matrix input_gradient(const nn::NetworkState& net, const nn::Activations& acts,
                                 const nn::Vector& grad_output) {
  return nn::backward_input(net, acts, nn::Matrix(grad_output));
}

// One clipped critic update maximizing mean f(real) - mean f(fake). Returns
// the critic loss mean f(fake) - mean f(real) before the update.
inline double critic_update(nn::NetworkState& critic, const nn::Matrix& real, const nn::Matrix& fake,
                            const nn::AdamConfig& adam, double clip) {
  const auto br = real.rows();
  const auto bf = fake.rows();
  auto real_acts = nn::forward(critic, real);
  auto fake_acts = nn::forward(critic, fake);
  auto grads = nn::backward(critic, real_acts,
                            nn::Matrix::Constant(br, 1, -1.0 / static_cast<double>(br)));
  grads += nn::backward(critic, fake_acts, nn::Matrix::Constant(bf, 1, 1.0 / static_cast<double>(bf)));
  const double loss = fake_acts.output().mean() - real_acts.output().mean();
  nn::adam_step(critic, grads, adam);
  nn::clip_parameters(critic, clip);
  return loss;
}

inline void record_epoch(TrainingHistory& history, std::size_t epoch, double d_loss, double g_loss) {
  if (!std::isfinite(d_loss) || !std::isfinite(g_loss))
    fail(ErrorCode::NonFiniteLoss, "training: non-finite loss at epoch " + std::to_string(epoch + 1));
  history.discriminator_loss.push_back(d_loss);
  history.generator_loss.push_back(g_loss);
}

}  // namespace fingan::detail
