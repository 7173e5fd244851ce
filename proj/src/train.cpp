#include "splat/train.hpp"

#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "splat/metrics.hpp"

namespace splat {

std::string format_log_line(const IterationLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%zu,%d", e.iteration, e.loss,
                e.psnr, e.gaussian_count, e.split_count);
  return buf;
}

TrainResult train(GaussianCloud& cloud, const std::vector<TrainView>& views,
                  const TrainConfig& cfg, const DensifyConfig& densify_cfg,
                  const ShadingConfig& shading_cfg, const Vec3& background) {
  if (views.empty()) throw std::invalid_argument("train: need at least one view");

  TrainResult result;
  result.log.reserve(size_t(std::max(0, cfg.iterations)));

  AdamState adam;
  adam.resize(cloud.size());
  DensifyState densify_state;

  std::vector<double> grad_accum(cloud.size(), 0.0);
  std::vector<int> seen_count(cloud.size(), 0);

  Rng rng(cfg.seed);
  std::vector<int> order(views.size());
  std::iota(order.begin(), order.end(), 0);
  auto reshuffle = [&] {
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.index(uint32_t(i))]);
    }
  };

  for (int it = 1; it <= cfg.iterations; ++it) {
    const size_t slot = size_t(it - 1) % views.size();
    if (slot == 0) reshuffle();
    const TrainView& view = views[order[slot]];

    BackwardResult back = backward(cloud, view.camera, view.gt, shading_cfg,
                                   cfg.loss_lambda, background);
    adam_step(cloud, back.grads, adam, cfg);

    for (size_t i = 0; i < cloud.size(); ++i) {
      if (back.grads.visible[i]) {
        grad_accum[i] += back.grads.screen_grad_norm[i];
        seen_count[i] += 1;
      }
    }

    IterationLog entry;
    entry.iteration = it;
    entry.loss = back.loss;
    entry.psnr = psnr(back.rendered, view.gt);
    entry.split_count = 0;

    if (it >= cfg.densify_from && it <= cfg.densify_until &&
        it % densify_cfg.densify_interval == 0) {
      std::vector<double> avg(cloud.size(), 0.0);
      for (size_t i = 0; i < cloud.size(); ++i) {
        if (seen_count[i] > 0) avg[i] = grad_accum[i] / double(seen_count[i]);
      }
      std::vector<int32_t> parent_of;
      const DensifyReport report =
          densify_step(cloud, avg, densify_cfg, densify_state, &parent_of);
      adam.remap(parent_of);
      grad_accum.assign(cloud.size(), 0.0);
      seen_count.assign(cloud.size(), 0);
      entry.split_count = report.total_splits();
    }

    entry.gaussian_count = cloud.size();
    result.log.push_back(entry);
  }
  return result;
}

}  // namespace splat
