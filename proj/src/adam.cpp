#include "splat/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace splat {

namespace {

inline void moment_update(double g, double& m, double& v) {
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
  v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
}

inline double adam_delta(double m, double v, double c1, double c2, double lr) {
  const double m_hat = m / c1;
  const double v_hat = v / c2;
  return -lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
}

}  // namespace

void AdamState::remap(const std::vector<int32_t>& parent_of) {
  GradientBundle new_m, new_v;
  new_m.resize(parent_of.size());
  new_v.resize(parent_of.size());
  for (size_t i = 0; i < parent_of.size(); ++i) {
    const int32_t p = parent_of[i];
    if (p < 0) continue;
    new_m.position[i] = m.position[p];
    new_m.log_scale[i] = m.log_scale[p];
    new_m.rotation[i] = m.rotation[p];
    new_m.opacity_logit[i] = m.opacity_logit[p];
    new_m.sh_diffuse[i] = m.sh_diffuse[p];
    new_m.sh_specular[i] = m.sh_specular[p];
    new_m.specular_logit[i] = m.specular_logit[p];
    new_m.visibility[i] = m.visibility[p];
    new_m.local_light[i] = m.local_light[p];
    new_v.position[i] = v.position[p];
    new_v.log_scale[i] = v.log_scale[p];
    new_v.rotation[i] = v.rotation[p];
    new_v.opacity_logit[i] = v.opacity_logit[p];
    new_v.sh_diffuse[i] = v.sh_diffuse[p];
    new_v.sh_specular[i] = v.sh_specular[p];
    new_v.specular_logit[i] = v.specular_logit[p];
    new_v.visibility[i] = v.visibility[p];
    new_v.local_light[i] = v.local_light[p];
  }
  new_m.global_light = m.global_light;
  new_v.global_light = v.global_light;
  m = std::move(new_m);
  v = std::move(new_v);
}

void adam_step(GaussianCloud& cloud, const GradientBundle& grads,
               AdamState& state, const TrainConfig& cfg) {
  const std::string bad = grads.first_non_finite();
  if (!bad.empty()) {
    throw std::runtime_error("adam_step: non-finite gradient in " + bad);
  }
  if (state.m.position.size() != cloud.size()) state.resize(cloud.size());

  state.step_count += 1;
  const double t = double(state.step_count);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t);

  const double horizon = std::max(1, cfg.iterations);
  const double frac = std::min(1.0, t / double(horizon));
  const double lr_pos =
      cfg.lr_position * std::pow(cfg.lr_position_final / cfg.lr_position, frac);

  parallel_for(static_cast<int64_t>(cloud.size()), [&](int64_t i) {
    Gaussian3D& g = cloud.gaussians[size_t(i)];
    auto upd = [&](double& p, double grad, double& m, double& v, double lr) {
      moment_update(grad, m, v);
      p += adam_delta(m, v, c1, c2, lr);
    };
    for (int c = 0; c < 3; ++c) {
      upd(g.position[c], grads.position[i][c], state.m.position[i][c],
          state.v.position[i][c], lr_pos);
      upd(g.log_scale[c], grads.log_scale[i][c], state.m.log_scale[i][c],
          state.v.log_scale[i][c], cfg.lr_scale);
      upd(g.local_light[c], grads.local_light[i][c], state.m.local_light[i][c],
          state.v.local_light[i][c], cfg.lr_lighting);
    }
    for (int c = 0; c < 4; ++c) {
      upd(g.rotation[c], grads.rotation[i][c], state.m.rotation[i][c],
          state.v.rotation[i][c], cfg.lr_rotation);
    }
    upd(g.opacity_logit, grads.opacity_logit[i], state.m.opacity_logit[i],
        state.v.opacity_logit[i], cfg.lr_opacity);
    for (int r = 0; r < kShCoeffCount; ++r) {
      for (int c = 0; c < 3; ++c) {
        upd(g.sh_diffuse(r, c), grads.sh_diffuse[i](r, c),
            state.m.sh_diffuse[i](r, c), state.v.sh_diffuse[i](r, c), cfg.lr_sh);
        upd(g.sh_specular(r, c), grads.sh_specular[i](r, c),
            state.m.sh_specular[i](r, c), state.v.sh_specular[i](r, c), cfg.lr_sh);
      }
    }
    upd(g.specular_logit, grads.specular_logit[i], state.m.specular_logit[i],
        state.v.specular_logit[i], cfg.lr_specular);
    upd(g.visibility, grads.visibility[i], state.m.visibility[i],
        state.v.visibility[i], cfg.lr_lighting);

    g.rotation.normalize();
    g.visibility = std::clamp(g.visibility, 0.0, 1.0);
    g.local_light = g.local_light.cwiseMax(0.0);
  });

  for (int c = 0; c < 3; ++c) {
    moment_update(grads.global_light[c], state.m.global_light[c],
                  state.v.global_light[c]);
    cloud.global_light[c] +=
        adam_delta(state.m.global_light[c], state.v.global_light[c], c1, c2,
                   cfg.lr_lighting);
  }
  cloud.global_light = cloud.global_light.cwiseMax(0.0);
  cloud.update_bbox();
}

}  // namespace splat
