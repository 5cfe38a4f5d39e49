#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cxrs/autograd.hpp"
#include "cxrs/error.hpp"
#include "cxrs/image.hpp"
#include "cxrs/rng.hpp"
#include "cxrs/tensor.hpp"

namespace cxrs {

// Channel plan of one projection-expansion-projection block. The derived
// defaults halve the width at the projections and restore it at expansion.
struct PepxChannels {
  std::size_t in = 0;
  std::size_t proj1 = 0;
  std::size_t expand = 0;
  std::size_t proj2 = 0;
  std::size_t out = 0;

  static PepxChannels derive(std::size_t in, std::size_t out) {
    PepxChannels c;
    c.in = in;
    c.out = out;
    c.proj1 = (out + 1) / 2;
    c.proj2 = (out + 1) / 2;
    c.expand = out;
    return c;
  }
};

// One projection-expansion-projection block: five convolutions with inner
// ReLUs and a linear extension output so skip junctions add raw features.
struct PepxBlock {
  PepxChannels channels;
  autograd::Var proj1_w, proj1_b;
  autograd::Var expand_w, expand_b;
  autograd::Var dw_w, dw_b;
  autograd::Var proj2_w, proj2_b;
  autograd::Var extend_w, extend_b;

  static PepxBlock zeros(const PepxChannels& ch) {
    auto leaf = [](std::vector<std::size_t> shape) {
      return autograd::make_leaf(Tensor(std::move(shape)), true);
    };
    PepxBlock b;
    b.channels = ch;
    b.proj1_w = leaf({ch.proj1, ch.in, 1, 1});
    b.proj1_b = leaf({ch.proj1});
    b.expand_w = leaf({ch.expand, ch.proj1, 1, 1});
    b.expand_b = leaf({ch.expand});
    b.dw_w = leaf({ch.expand, 1, 3, 3});
    b.dw_b = leaf({ch.expand});
    b.proj2_w = leaf({ch.proj2, ch.expand, 1, 1});
    b.proj2_b = leaf({ch.proj2});
    b.extend_w = leaf({ch.out, ch.proj2, 1, 1});
    b.extend_b = leaf({ch.out});
    return b;
  }

  autograd::Var forward(const autograd::Var& x) const {
    namespace ag = autograd;
    if (x->value.rank() != 4 || x->value.shape[1] != channels.in) {
      throw ValidationError("block expects " + std::to_string(channels.in) +
                            " input channels, got " + shape_to_string(x->value.shape));
    }
    auto h = ag::relu(ag::conv2d(x, proj1_w, proj1_b));
    h = ag::relu(ag::conv2d(h, expand_w, expand_b));
    h = ag::relu(ag::conv2d(h, dw_w, dw_b, /*stride=*/1, /*pad=*/1,
                            static_cast<int>(channels.expand)));
    h = ag::relu(ag::conv2d(h, proj2_w, proj2_b));
    return ag::conv2d(h, extend_w, extend_b);
  }
};

struct StageConfig {
  std::size_t blocks = 2;
  std::size_t channels = 32;
  bool pool_before = false;  // 2x2 max pool ahead of the stage
};

struct NetworkConfig {
  std::size_t input_height = 224;
  std::size_t input_width = 224;
  std::size_t stem_channels = 32;
  std::vector<StageConfig> stages = {{2, 32, false}, {2, 48, true}, {2, 64, true}};
  // Additive connections between block outputs, (source, destination) in
  // global block order; the source output is added onto the destination's.
  std::vector<std::pair<std::size_t, std::size_t>> skip_map = {{0, 1}, {2, 3}, {4, 5}};
  std::size_t head_hidden = 64;

  std::size_t total_blocks() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.blocks;
    return n;
  }
};

struct BlockShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  bool operator==(const BlockShape&) const = default;
};

struct NetworkShapes {
  BlockShape stem;
  std::vector<BlockShape> blocks;  // output shape of each block, global order
};

// Symbolic shape pass over a config; mirrors the arithmetic of the real
// forward pass and is the authority for config validation.
inline NetworkShapes infer_block_shapes(const NetworkConfig& config) {
  if (config.stages.empty()) throw ValidationError("network needs at least one stage");
  if (config.stem_channels == 0 || config.head_hidden == 0) {
    throw ValidationError("network channel counts must be positive");
  }
  for (const auto& s : config.stages) {
    if (s.blocks == 0 || s.channels == 0) {
      throw ValidationError("every stage needs positive block and channel counts");
    }
  }

  const long h0 = (static_cast<long>(config.input_height) + 6 - 7) / 2 + 1;
  const long w0 = (static_cast<long>(config.input_width) + 6 - 7) / 2 + 1;
  if (h0 < 1 || w0 < 1) {
    throw ValidationError("input " + std::to_string(config.input_height) + "x" +
                          std::to_string(config.input_width) + " too small for the stem");
  }

  NetworkShapes shapes;
  shapes.stem = {config.stem_channels, static_cast<std::size_t>(h0),
                 static_cast<std::size_t>(w0)};
  std::size_t h = shapes.stem.height, w = shapes.stem.width;
  for (const auto& stage : config.stages) {
    if (stage.pool_before) {
      h /= 2;
      w /= 2;
      if (h == 0 || w == 0) {
        throw ValidationError("feature map vanishes under downsampling; enlarge the input");
      }
    }
    for (std::size_t b = 0; b < stage.blocks; ++b) {
      shapes.blocks.push_back({stage.channels, h, w});
    }
  }

  std::map<std::pair<std::size_t, std::size_t>, bool> seen;
  for (const auto& [src, dst] : config.skip_map) {
    if (src >= dst) {
      throw ValidationError("skip " + std::to_string(src) + "->" + std::to_string(dst) +
                            " must go forward");
    }
    if (dst >= shapes.blocks.size()) {
      throw ValidationError("skip destination " + std::to_string(dst) +
                            " exceeds block count " + std::to_string(shapes.blocks.size()));
    }
    if (!(shapes.blocks[src] == shapes.blocks[dst])) {
      throw ValidationError("skip " + std::to_string(src) + "->" + std::to_string(dst) +
                            " joins mismatched block shapes");
    }
    if (seen[{src, dst}]) {
      throw ValidationError("duplicate skip " + std::to_string(src) + "->" +
                            std::to_string(dst));
    }
    seen[{src, dst}] = true;
  }
  return shapes;
}

// Regression network: stem conv, stages of PEPX blocks with optional
// downsampling and additive skips, global average pool, two dense layers,
// sigmoid. One instance scores one target kind.
class SeverityNet {
 public:
  explicit SeverityNet(NetworkConfig config = {}, std::uint64_t seed = 0)
      : config_(std::move(config)), shapes_(infer_block_shapes(config_)) {
    build_parameters();
    Rng rng(derive_seed(seed, 0x6e657469ULL));
    initialize(rng);
  }

  const NetworkConfig& config() const { return config_; }
  const NetworkShapes& shapes() const { return shapes_; }

  const std::vector<std::pair<std::string, autograd::Var>>& parameters() const {
    return params_;
  }

  autograd::Var parameter(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return params_[it->second].second;
  }

  bool has_parameter(const std::string& name) const { return index_.count(name) > 0; }

  static bool is_head_parameter(const std::string& name) {
    return name.rfind("head.", 0) == 0;
  }

  // Parameters are drawn in registration order, so a fixed rng yields a
  // fixed network.
  void initialize(Rng& rng) {
    for (auto& [name, var] : params_) {
      initialize_parameter(name, var, rng);
    }
  }

  // Biases and the final dense weight start at zero: a fresh network emits
  // sigmoid(0) = 0.5 until the first optimizer step. Everything else is a
  // He-style draw.
  void initialize_parameter(const std::string& name, const autograd::Var& var, Rng& rng) {
    Tensor& t = var->value;
    const bool is_bias = name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
    if (is_bias || name == "head.fc2.weight") {
      std::fill(t.data.begin(), t.data.end(), 0.0);
    } else {
      std::size_t fan_in = 1;
      for (std::size_t i = 1; i < t.shape.size(); ++i) fan_in *= t.shape[i];
      const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (double& v : t.data) v = rng.normal(0.0, stddev);
    }
    var->zero_grad();
  }

  // Batched forward pass over (N, 1, H, W) inputs; returns (N, 1) in (0,1).
  autograd::Var forward(const Tensor& input) const {
    if (input.rank() != 4 || input.shape[1] != 1 ||
        input.shape[2] != config_.input_height || input.shape[3] != config_.input_width) {
      throw ValidationError("network expects (N, 1, " + std::to_string(config_.input_height) +
                            ", " + std::to_string(config_.input_width) + ") input, got " +
                            shape_to_string(input.shape));
    }
    return forward_from(autograd::make_leaf(input));
  }

  autograd::Var forward_from(const autograd::Var& input,
                             std::vector<BlockShape>* shape_trace = nullptr) const {
    namespace ag = autograd;
    auto x = ag::relu(ag::conv2d(input, parameter("stem.weight"), parameter("stem.bias"),
                                 /*stride=*/2, /*pad=*/3));

    std::vector<ag::Var> block_outputs;
    block_outputs.reserve(shapes_.blocks.size());
    std::size_t block_index = 0;
    for (std::size_t s = 0; s < config_.stages.size(); ++s) {
      if (config_.stages[s].pool_before) x = ag::max_pool2(x);
      for (std::size_t b = 0; b < config_.stages[s].blocks; ++b) {
        auto y = block_view(s + 1, b + 1).forward(x);
        for (const auto& [src, dst] : config_.skip_map) {
          if (dst == block_index) y = ag::add(y, block_outputs[src]);
        }
        if (shape_trace) {
          shape_trace->push_back(
              {y->value.shape[1], y->value.shape[2], y->value.shape[3]});
        }
        block_outputs.push_back(y);
        x = y;
        ++block_index;
      }
    }

    auto pooled = ag::global_avg_pool(x);
    auto hidden = ag::relu(ag::dense(pooled, parameter("head.fc1.weight"),
                                     parameter("head.fc1.bias")));
    return ag::sigmoid(ag::dense(hidden, parameter("head.fc2.weight"),
                                 parameter("head.fc2.bias")));
  }

  double predict(const Image& img) const {
    if (img.width != static_cast<int>(config_.input_width) ||
        img.height != static_cast<int>(config_.input_height)) {
      throw ValidationError("image " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + " does not match network input " +
                            std::to_string(config_.input_width) + "x" +
                            std::to_string(config_.input_height));
    }
    Tensor input({1, 1, static_cast<std::size_t>(img.height),
                  static_cast<std::size_t>(img.width)});
    input.data = img.pixels;
    return forward(input)->value.data[0];
  }

 private:
  // Assembles a parameter view of one block; shares the stored tensors.
  PepxBlock block_view(std::size_t stage, std::size_t block) const {
    const std::string p = "stage" + std::to_string(stage) + ".block" + std::to_string(block);
    PepxBlock b;
    b.proj1_w = parameter(p + ".proj1.weight");
    b.proj1_b = parameter(p + ".proj1.bias");
    b.expand_w = parameter(p + ".expand.weight");
    b.expand_b = parameter(p + ".expand.bias");
    b.dw_w = parameter(p + ".dw.weight");
    b.dw_b = parameter(p + ".dw.bias");
    b.proj2_w = parameter(p + ".proj2.weight");
    b.proj2_b = parameter(p + ".proj2.bias");
    b.extend_w = parameter(p + ".extend.weight");
    b.extend_b = parameter(p + ".extend.bias");
    b.channels.in = b.proj1_w->value.shape[1];
    b.channels.proj1 = b.proj1_w->value.shape[0];
    b.channels.expand = b.expand_w->value.shape[0];
    b.channels.proj2 = b.proj2_w->value.shape[0];
    b.channels.out = b.extend_w->value.shape[0];
    return b;
  }

  void add_param(const std::string& name, std::vector<std::size_t> shape) {
    index_[name] = params_.size();
    params_.emplace_back(name, autograd::make_leaf(Tensor(std::move(shape)), true));
  }

  void add_conv(const std::string& prefix, std::size_t out_c, std::size_t in_cg,
                std::size_t k) {
    add_param(prefix + ".weight", {out_c, in_cg, k, k});
    add_param(prefix + ".bias", {out_c});
  }

  void build_parameters() {
    add_conv("stem", config_.stem_channels, 1, 7);
    std::size_t in_c = config_.stem_channels;
    for (std::size_t s = 0; s < config_.stages.size(); ++s) {
      for (std::size_t b = 0; b < config_.stages[s].blocks; ++b) {
        const PepxChannels ch = PepxChannels::derive(in_c, config_.stages[s].channels);
        const std::string p =
            "stage" + std::to_string(s + 1) + ".block" + std::to_string(b + 1);
        add_conv(p + ".proj1", ch.proj1, ch.in, 1);
        add_conv(p + ".expand", ch.expand, ch.proj1, 1);
        add_conv(p + ".dw", ch.expand, 1, 3);
        add_conv(p + ".proj2", ch.proj2, ch.expand, 1);
        add_conv(p + ".extend", ch.out, ch.proj2, 1);
        in_c = ch.out;
      }
    }
    add_param("head.fc1.weight", {config_.head_hidden, in_c});
    add_param("head.fc1.bias", {config_.head_hidden});
    add_param("head.fc2.weight", {1, config_.head_hidden});
    add_param("head.fc2.bias", {1});
  }

  NetworkConfig config_;
  NetworkShapes shapes_;
  std::vector<std::pair<std::string, autograd::Var>> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace cxrs
