#pragma once

#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "shortmr/errors.hpp"
#include "shortmr/net/ops.hpp"
#include "shortmr/rng.hpp"
#include "shortmr/volume.hpp"

namespace shortmr {

// Reference volumetric classifier: `stages` conv(3x3x3, pad 1) + ReLU blocks,
// 2x max pooling between stages, global average pooling and a linear head.
// Channel widths double per stage starting at base_channels. feature_layer
// names the post-ReLU activations used for attribution ("stage1".."stageN").
struct ModelSpec {
  std::string arch = "cnn3d";
  int stages = 4;
  int base_channels = 8;
  Shape3 input_shape{32, 32, 32};
  int classes = 2;
  std::string feature_layer = "stage4";
};

void validate_model_spec(const ModelSpec& spec);
int feature_stage_index(const ModelSpec& spec);  // 0-based

namespace net {

template <typename T>
class Cnn3d {
 public:
  explicit Cnn3d(const ModelSpec& spec) : spec_(spec) {
    validate_model_spec(spec);
    feature_stage_ = feature_stage_index(spec);
    int d = static_cast<int>(spec.input_shape[0]);
    int h = static_cast<int>(spec.input_shape[1]);
    int w = static_cast<int>(spec.input_shape[2]);
    int cin = 1;
    std::size_t off = 0;
    for (int s = 0; s < spec.stages; ++s) {
      Stage st;
      st.cin = cin;
      st.cout = spec.base_channels << s;
      st.d = d;
      st.h = h;
      st.w = w;
      st.pooled = s + 1 < spec.stages;
      st.w_off = off;
      off += static_cast<std::size_t>(st.cout) * st.cin * 27;
      st.b_off = off;
      off += static_cast<std::size_t>(st.cout);
      stages_.push_back(st);
      cin = st.cout;
      if (st.pooled) {
        d /= 2;
        h /= 2;
        w /= 2;
      }
    }
    head_w_off_ = off;
    off += static_cast<std::size_t>(spec.classes) * cin;
    head_b_off_ = off;
    off += static_cast<std::size_t>(spec.classes);
    params_.assign(off, T(0));
    last_channels_ = cin;
  }

  const ModelSpec& spec() const { return spec_; }
  std::size_t param_count() const { return params_.size(); }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  int feature_stage() const { return feature_stage_; }
  int feature_channels() const { return stages_[feature_stage_].cout; }
  Shape3 feature_shape() const {
    const auto& st = stages_[feature_stage_];
    return {st.d, st.h, st.w};
  }

  // Kaiming-normal conv weights, zero biases, smaller head init.
  void init_params(Rng& rng) {
    for (const auto& st : stages_) {
      const double std = std::sqrt(2.0 / (static_cast<double>(st.cin) * 27.0));
      for (std::size_t i = 0; i < static_cast<std::size_t>(st.cout) * st.cin * 27; ++i) {
        params_[st.w_off + i] = static_cast<T>(rng.normal() * std);
      }
      for (int i = 0; i < st.cout; ++i) params_[st.b_off + i] = T(0);
    }
    const double std = std::sqrt(1.0 / static_cast<double>(last_channels_));
    for (std::size_t i = 0;
         i < static_cast<std::size_t>(spec_.classes) * last_channels_; ++i) {
      params_[head_w_off_ + i] = static_cast<T>(rng.normal() * std);
    }
    for (int i = 0; i < spec_.classes; ++i) params_[head_b_off_ + i] = T(0);
  }

  struct Workspace {
    // per-stage buffers
    std::vector<std::vector<T>> in_pad;          // padded stage inputs
    std::vector<std::vector<T>> act;             // post-ReLU conv outputs
    std::vector<std::vector<T>> pooled;          // pooled outputs
    std::vector<std::vector<std::int32_t>> argmax;
    std::vector<T> feat;                          // GAP output
    std::vector<T> logits;
    // backward scratch
    std::vector<std::vector<T>> g_act;
    std::vector<std::vector<T>> g_in_pad;
    std::vector<T> g_feat;
  };

  Workspace make_workspace() const {
    Workspace ws;
    ws.in_pad.resize(stages_.size());
    ws.act.resize(stages_.size());
    ws.pooled.resize(stages_.size());
    ws.argmax.resize(stages_.size());
    ws.g_act.resize(stages_.size());
    ws.g_in_pad.resize(stages_.size());
    for (std::size_t s = 0; s < stages_.size(); ++s) {
      const auto& st = stages_[s];
      ws.in_pad[s].assign(pad_size(st), T(0));
      ws.act[s].assign(act_size(st), T(0));
      ws.g_act[s].assign(act_size(st), T(0));
      ws.g_in_pad[s].assign(pad_size(st), T(0));
      if (st.pooled) {
        const std::size_t p = static_cast<std::size_t>(st.cout) * (st.d / 2) *
                              (st.h / 2) * (st.w / 2);
        ws.pooled[s].assign(p, T(0));
        ws.argmax[s].assign(p, 0);
      }
    }
    ws.feat.assign(static_cast<std::size_t>(last_channels_), T(0));
    ws.g_feat.assign(static_cast<std::size_t>(last_channels_), T(0));
    ws.logits.assign(static_cast<std::size_t>(spec_.classes), T(0));
    return ws;
  }

  // x: D*H*W values. Fills ws.logits and all intermediate activations.
  void forward(const T* x, Workspace& ws) const {
    const T* cur = x;
    for (std::size_t s = 0; s < stages_.size(); ++s) {
      const auto& st = stages_[s];
      net::pad3d(cur, st.cin, st.d, st.h, st.w, ws.in_pad[s].data());
      net::conv3d_fwd(ws.in_pad[s].data(), st.cin, st.d, st.h, st.w,
                      params_.data() + st.w_off, params_.data() + st.b_off,
                      ws.act[s].data(), st.cout);
      net::relu(ws.act[s].size(), ws.act[s].data(), ws.act[s].data());
      if (st.pooled) {
        net::maxpool2_fwd(ws.act[s].data(), st.cout, st.d, st.h, st.w,
                          ws.pooled[s].data(), ws.argmax[s].data());
        cur = ws.pooled[s].data();
      } else {
        cur = ws.act[s].data();
      }
    }
    const auto& last = stages_.back();
    const std::size_t voxels =
        static_cast<std::size_t>(last.d) * last.h * last.w;
    net::gap_fwd(cur, last.cout, voxels, ws.feat.data());
    net::linear_fwd(ws.feat.data(), last.cout, params_.data() + head_w_off_,
                    params_.data() + head_b_off_, ws.logits.data(),
                    spec_.classes);
  }

  // Backpropagates dlogits; accumulates parameter gradients into grads (same
  // layout as params). Requires a prior forward() on the same workspace.
  void backward(const T* dlogits, Workspace& ws, T* grads) const {
    backprop(dlogits, ws, grads, -1, nullptr);
  }

  // Gradient of logits[target] w.r.t. the post-ReLU activations of the
  // feature stage (before pooling). No parameter gradients are produced.
  void feature_gradient(int target_class, Workspace& ws, std::vector<T>& dact) const {
    std::vector<T> dlogits(static_cast<std::size_t>(spec_.classes), T(0));
    dlogits[static_cast<std::size_t>(target_class)] = T(1);
    dact.assign(ws.act[static_cast<std::size_t>(feature_stage_)].size(), T(0));
    backprop(dlogits.data(), ws, nullptr, feature_stage_, dact.data());
  }

  std::span<const T> feature_activations(const Workspace& ws) const {
    const auto& a = ws.act[static_cast<std::size_t>(feature_stage_)];
    return {a.data(), a.size()};
  }

  // Runs the model tail starting from replacement post-ReLU activations of
  // the feature stage. Used by the finite-difference oracle.
  std::vector<T> forward_tail_from_feature(const T* act, Workspace& ws) const {
    const auto fs = static_cast<std::size_t>(feature_stage_);
    const T* cur = act;
    std::vector<T> scratch;
    for (std::size_t s = fs; s < stages_.size(); ++s) {
      const auto& st = stages_[s];
      if (s > fs) {
        net::pad3d(cur, st.cin, st.d, st.h, st.w, ws.in_pad[s].data());
        net::conv3d_fwd(ws.in_pad[s].data(), st.cin, st.d, st.h, st.w,
                        params_.data() + st.w_off, params_.data() + st.b_off,
                        ws.act[s].data(), st.cout);
        net::relu(ws.act[s].size(), ws.act[s].data(), ws.act[s].data());
        cur = ws.act[s].data();
      }
      if (st.pooled) {
        net::maxpool2_fwd(cur, st.cout, st.d, st.h, st.w, ws.pooled[s].data(),
                          ws.argmax[s].data());
        cur = ws.pooled[s].data();
      }
    }
    const auto& last = stages_.back();
    const std::size_t voxels =
        static_cast<std::size_t>(last.d) * last.h * last.w;
    net::gap_fwd(cur, last.cout, voxels, ws.feat.data());
    std::vector<T> logits(static_cast<std::size_t>(spec_.classes), T(0));
    net::linear_fwd(ws.feat.data(), last.cout, params_.data() + head_w_off_,
                    params_.data() + head_b_off_, logits.data(), spec_.classes);
    return logits;
  }

  std::size_t head_weight_offset() const { return head_w_off_; }
  std::size_t head_bias_offset() const { return head_b_off_; }
  int last_channels() const { return last_channels_; }

 private:
  struct Stage {
    int cin = 0, cout = 0;
    int d = 0, h = 0, w = 0;  // spatial dims entering the stage
    bool pooled = false;
    std::size_t w_off = 0, b_off = 0;
  };

  static std::size_t act_size(const Stage& st) {
    return static_cast<std::size_t>(st.cout) * st.d * st.h * st.w;
  }
  static std::size_t pad_size(const Stage& st) {
    return static_cast<std::size_t>(st.cin) * (st.d + 2) * (st.h + 2) *
           (st.w + 2);
  }

  // stop_stage >= 0: stop after computing d(act) of that stage, writing it to
  // dact_out and skipping all parameter gradients.
  void backprop(const T* dlogits, Workspace& ws, T* grads, int stop_stage,
                T* dact_out) const {
    const auto& last = stages_.back();
    const std::size_t voxels =
        static_cast<std::size_t>(last.d) * last.h * last.w;
    const T* gap_in = last.pooled ? ws.pooled.back().data() : ws.act.back().data();
    (void)gap_in;

    // head
    std::vector<T> dfeat(static_cast<std::size_t>(last_channels_), T(0));
    if (grads) {
      net::linear_bwd(ws.feat.data(), last_channels_,
                      params_.data() + head_w_off_, dlogits, spec_.classes,
                      grads + head_w_off_, grads + head_b_off_, dfeat.data());
    } else {
      for (int ci = 0; ci < last_channels_; ++ci) {
        T acc = 0;
        for (int k = 0; k < spec_.classes; ++k) {
          acc += params_[head_w_off_ + static_cast<std::size_t>(k) *
                                           last_channels_ + ci] *
                 dlogits[k];
        }
        dfeat[static_cast<std::size_t>(ci)] = acc;
      }
    }

    // d w.r.t. GAP input (the last stage's post-pool or post-ReLU tensor)
    std::vector<T>& dcur_buf = ws.g_act.back();
    std::vector<T> dpool_buf;
    T* dcur;
    if (last.pooled) {
      dpool_buf.assign(ws.pooled.back().size(), T(0));
      net::gap_bwd(dfeat.data(), last.cout, voxels, dpool_buf.data());
      dcur = dpool_buf.data();
    } else {
      net::gap_bwd(dfeat.data(), last.cout, voxels, dcur_buf.data());
      dcur = dcur_buf.data();
    }

    for (int s = static_cast<int>(stages_.size()) - 1; s >= 0; --s) {
      const auto& st = stages_[static_cast<std::size_t>(s)];
      auto& g_act = ws.g_act[static_cast<std::size_t>(s)];
      if (st.pooled) {
        // dcur currently refers to the pooled grid; scatter to act grid
        net::maxpool2_bwd(dcur, st.cout, st.d, st.h, st.w,
                          ws.argmax[static_cast<std::size_t>(s)].data(),
                          g_act.data());
      } else if (dcur != g_act.data()) {
        std::copy(dcur, dcur + g_act.size(), g_act.begin());
      }
      if (s == stop_stage) {
        std::copy(g_act.begin(), g_act.end(), dact_out);
        return;
      }
      // ReLU, then conv
      net::relu_bwd(g_act.size(), g_act.data(),
                    ws.act[static_cast<std::size_t>(s)].data(), g_act.data());
      if (grads) {
        net::conv3d_bwd_weights(ws.in_pad[static_cast<std::size_t>(s)].data(),
                                st.cin, g_act.data(), st.cout, st.d, st.h, st.w,
                                grads + st.w_off, grads + st.b_off);
      }
      if (s == 0) break;
      auto& g_pad = ws.g_in_pad[static_cast<std::size_t>(s)];
      std::fill(g_pad.begin(), g_pad.end(), T(0));
      net::conv3d_bwd_data(g_act.data(), st.cout, st.d, st.h, st.w,
                           params_.data() + st.w_off, g_pad.data(), st.cin);
      // crop into the previous stage's (pooled) grid gradient
      const auto& prev = stages_[static_cast<std::size_t>(s - 1)];
      if (prev.pooled) {
        auto& dprev = ws.pooled[static_cast<std::size_t>(s - 1)];
        dpool_buf.assign(dprev.size(), T(0));
        net::crop3d(g_pad.data(), st.cin, st.d, st.h, st.w, dpool_buf.data());
        dcur = dpool_buf.data();
      } else {
        net::crop3d(g_pad.data(), st.cin, st.d, st.h, st.w,
                    ws.g_act[static_cast<std::size_t>(s - 1)].data());
        dcur = ws.g_act[static_cast<std::size_t>(s - 1)].data();
      }
    }
  }

  ModelSpec spec_;
  std::vector<Stage> stages_;
  std::vector<T> params_;
  std::size_t head_w_off_ = 0, head_b_off_ = 0;
  int last_channels_ = 0;
  int feature_stage_ = 0;
};

}  // namespace net
}  // namespace shortmr
