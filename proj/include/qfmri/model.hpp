#pragma once

// Assembles the baseline CNN and the three hybrid variants. A model is a
// ModelSpec (shapes) plus a flat parameter vector with a named slice map.
//
// Hybrid input routing: QCNN block k reads x[16k .. 16k+16); the classical
// conv stack reads the remaining suffix. QCNN probability pairs come first in
// the concatenated feature vector, classical conv features last.

#include <array>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfmri/errors.hpp"
#include "qfmri/nn.hpp"
#include "qfmri/qcnn.hpp"

namespace qfmri::model {

enum class ModelKind { baseline, hybrid1, hybrid2, hybrid4 };

inline std::string kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::baseline: return "baseline";
    case ModelKind::hybrid1: return "hybrid1";
    case ModelKind::hybrid2: return "hybrid2";
    case ModelKind::hybrid4: return "hybrid4";
  }
  throw ConfigError("unknown model kind");
}

inline ModelKind kind_from_name(const std::string& name) {
  if (name == "baseline") return ModelKind::baseline;
  if (name == "hybrid1") return ModelKind::hybrid1;
  if (name == "hybrid2") return ModelKind::hybrid2;
  if (name == "hybrid4") return ModelKind::hybrid4;
  throw ConfigError("unknown model kind '" + name + "'");
}

inline constexpr int kInputLen = 140;
inline constexpr int kQcnnSegmentLen = 16;

struct ModelSpec {
  ModelKind kind;
  int input_len = kInputLen;
  int qcnn_count = 0;
  int classical_input_len = kInputLen;
  std::vector<nn::Conv1dConfig> conv_layers;
  std::vector<int> conv_input_lens;   // per conv layer
  std::vector<int> conv_output_lens;  // per conv layer
  int flatten_dim = 0;
  int concat_dim = 0;
  std::vector<nn::DenseConfig> fc_layers;
  double dropout_rate = 0.5;
};

inline ModelSpec make_spec(ModelKind kind) {
  ModelSpec s;
  s.kind = kind;
  switch (kind) {
    case ModelKind::baseline: s.qcnn_count = 0; break;
    case ModelKind::hybrid1: s.qcnn_count = 1; break;
    case ModelKind::hybrid2: s.qcnn_count = 2; break;
    case ModelKind::hybrid4: s.qcnn_count = 4; break;
  }
  s.classical_input_len = s.input_len - kQcnnSegmentLen * s.qcnn_count;
  s.conv_layers = {{1, 8, 30, 2}, {8, 16, 20, 2}, {16, 32, 10, 2}};
  if (kind == ModelKind::hybrid4) s.conv_layers.resize(2);
  int len = s.classical_input_len;
  for (const auto& c : s.conv_layers) {
    s.conv_input_lens.push_back(len);
    len = nn::conv1d_output_length(len, c.kernel, c.stride);
    s.conv_output_lens.push_back(len);
  }
  s.flatten_dim = s.conv_layers.back().out_channels * len;
  s.concat_dim = s.flatten_dim + 2 * s.qcnn_count;
  s.fc_layers = {{s.concat_dim, 18}, {18, 9}, {9, 2}};
  return s;
}

struct ParamSlice {
  std::string name;
  std::size_t offset;
  std::size_t len;
};

inline std::vector<ParamSlice> param_layout(const ModelSpec& spec) {
  std::vector<ParamSlice> slices;
  std::size_t off = 0;
  auto add = [&](const std::string& name, std::size_t len) {
    slices.push_back({name, off, len});
    off += len;
  };
  for (int q = 0; q < spec.qcnn_count; ++q)
    add("qcnn" + std::to_string(q), qcnn::kQcnnAngles);
  for (std::size_t i = 0; i < spec.conv_layers.size(); ++i) {
    add("conv" + std::to_string(i + 1) + ".w",
        spec.conv_layers[i].weight_count());
    add("conv" + std::to_string(i + 1) + ".b",
        spec.conv_layers[i].out_channels);
  }
  for (std::size_t i = 0; i < spec.fc_layers.size(); ++i) {
    add("fc" + std::to_string(i + 1) + ".w",
        static_cast<std::size_t>(spec.fc_layers[i].in_dim) *
            spec.fc_layers[i].out_dim);
    add("fc" + std::to_string(i + 1) + ".b", spec.fc_layers[i].out_dim);
  }
  return slices;
}

inline std::size_t count_parameters(const ModelSpec& spec) {
  const auto layout = param_layout(spec);
  return layout.back().offset + layout.back().len;
}

struct ModelParams {
  std::vector<double> values;
};

namespace detail {

inline const ParamSlice& find_slice(const std::vector<ParamSlice>& layout,
                                    const std::string& name) {
  for (const auto& s : layout)
    if (s.name == name) return s;
  throw ConfigError("param slice '" + name + "' not found");
}

}  // namespace detail

// Quantum angles ~ N(0, 0.1); conv/dense weights He-initialized; biases zero.
inline ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  ModelParams p;
  p.values.assign(count_parameters(spec), 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto layout = param_layout(spec);
  for (const auto& s : layout) {
    if (s.name.rfind("qcnn", 0) == 0) {
      for (std::size_t i = 0; i < s.len; ++i)
        p.values[s.offset + i] = 0.1 * gauss(rng);
    } else if (s.name.size() > 2 && s.name.substr(s.name.size() - 2) == ".w") {
      double fan_in = 1.0;
      if (s.name.rfind("conv", 0) == 0) {
        const auto& c = spec.conv_layers[s.name[4] - '1'];
        fan_in = static_cast<double>(c.in_channels) * c.kernel;
      } else {
        fan_in = spec.fc_layers[s.name[2] - '1'].in_dim;
      }
      const double std_dev = std::sqrt(2.0 / fan_in);
      for (std::size_t i = 0; i < s.len; ++i)
        p.values[s.offset + i] = std_dev * gauss(rng);
    }
    // biases stay zero
  }
  return p;
}

struct InputSplit {
  std::vector<std::vector<double>> qcnn_segments;
  std::vector<double> classical_segment;
};

inline InputSplit split_input(std::span<const double> x,
                              const ModelSpec& spec) {
  if (static_cast<int>(x.size()) != spec.input_len)
    throw ShapeError("split_input: expected " +
                     std::to_string(spec.input_len) + " points, got " +
                     std::to_string(x.size()));
  InputSplit s;
  for (int q = 0; q < spec.qcnn_count; ++q)
    s.qcnn_segments.emplace_back(x.begin() + q * kQcnnSegmentLen,
                                 x.begin() + (q + 1) * kQcnnSegmentLen);
  s.classical_segment.assign(x.begin() + spec.qcnn_count * kQcnnSegmentLen,
                             x.end());
  return s;
}

struct ForwardTrace {
  InputSplit split;
  std::vector<std::array<double, 2>> qcnn_probs;
  std::vector<std::vector<double>> conv_inputs;   // per conv layer
  std::vector<std::vector<double>> conv_pre;      // pre-activation
  std::vector<std::vector<double>> conv_post;     // post-ReLU
  std::vector<double> dropout_mask;
  std::vector<double> concat;
  std::vector<std::vector<double>> fc_inputs;
  std::vector<std::vector<double>> fc_pre;
  std::array<double, 2> logits{};
};

inline std::pair<std::array<double, 2>, ForwardTrace> forward(
    const ModelSpec& spec, const ModelParams& params,
    std::span<const double> x, bool training, std::mt19937_64& rng) {
  const auto layout = param_layout(spec);
  auto slice = [&](const std::string& name) {
    const auto& s = detail::find_slice(layout, name);
    return std::span<const double>(params.values.data() + s.offset, s.len);
  };
  if (params.values.size() != count_parameters(spec))
    throw ShapeError("forward: parameter vector length mismatch");

  ForwardTrace tr;
  tr.split = split_input(x, spec);

  for (int q = 0; q < spec.qcnn_count; ++q) {
    const auto angles = slice("qcnn" + std::to_string(q));
    const auto qp = qcnn::QcnnParams::from_flat(angles);
    auto [p0, p1] = qcnn::qcnn_forward(tr.split.qcnn_segments[q], qp);
    tr.qcnn_probs.push_back({p0, p1});
  }

  std::vector<double> h = tr.split.classical_segment;
  for (std::size_t i = 0; i < spec.conv_layers.size(); ++i) {
    tr.conv_inputs.push_back(h);
    const std::string tag = "conv" + std::to_string(i + 1);
    auto z = nn::conv1d_forward(spec.conv_layers[i], slice(tag + ".w"),
                                slice(tag + ".b"), h, spec.conv_input_lens[i]);
    tr.conv_pre.push_back(z);
    h = nn::relu_forward(z);
    tr.conv_post.push_back(h);
  }
  auto drop = nn::dropout_forward(h, spec.dropout_rate, training, rng);
  tr.dropout_mask = drop.mask;

  tr.concat.reserve(spec.concat_dim);
  for (const auto& pq : tr.qcnn_probs) {
    tr.concat.push_back(pq[0]);
    tr.concat.push_back(pq[1]);
  }
  tr.concat.insert(tr.concat.end(), drop.y.begin(), drop.y.end());
  if (static_cast<int>(tr.concat.size()) != spec.concat_dim)
    throw ShapeError("forward: concat dimension mismatch");

  std::vector<double> f = tr.concat;
  for (std::size_t i = 0; i < spec.fc_layers.size(); ++i) {
    tr.fc_inputs.push_back(f);
    const std::string tag = "fc" + std::to_string(i + 1);
    auto z = nn::dense_forward(spec.fc_layers[i], slice(tag + ".w"),
                               slice(tag + ".b"), f);
    tr.fc_pre.push_back(z);
    f = (i + 1 < spec.fc_layers.size()) ? nn::relu_forward(z) : z;
  }
  tr.logits = {f[0], f[1]};
  return {tr.logits, std::move(tr)};
}

inline std::vector<double> backward(const ModelSpec& spec,
                                    const ModelParams& params,
                                    const ForwardTrace& trace,
                                    std::array<double, 2> dlogits) {
  const auto layout = param_layout(spec);
  std::vector<double> grads(params.values.size(), 0.0);
  auto slice = [&](const std::string& name) {
    const auto& s = detail::find_slice(layout, name);
    return std::span<const double>(params.values.data() + s.offset, s.len);
  };
  auto gslice = [&](const std::string& name) {
    const auto& s = detail::find_slice(layout, name);
    return std::span<double>(grads.data() + s.offset, s.len);
  };

  // fully connected chain
  std::vector<double> d = {dlogits[0], dlogits[1]};
  for (int i = static_cast<int>(spec.fc_layers.size()) - 1; i >= 0; --i) {
    const std::string tag = "fc" + std::to_string(i + 1);
    if (i + 1 < static_cast<int>(spec.fc_layers.size()))
      d = nn::relu_backward(trace.fc_pre[i], d);
    auto g = nn::dense_backward(spec.fc_layers[i], slice(tag + ".w"),
                                trace.fc_inputs[i], d);
    auto gw = gslice(tag + ".w");
    auto gb = gslice(tag + ".b");
    for (std::size_t j = 0; j < gw.size(); ++j) gw[j] = g.dw[j];
    for (std::size_t j = 0; j < gb.size(); ++j) gb[j] = g.db[j];
    d = std::move(g.dx);
  }

  // split concat gradient
  const int qdim = 2 * spec.qcnn_count;
  for (int q = 0; q < spec.qcnn_count; ++q) {
    const std::array<double, 2> upstream = {d[2 * q], d[2 * q + 1]};
    const auto qp = qcnn::QcnnParams::from_flat(slice("qcnn" + std::to_string(q)));
    const auto qg =
        qcnn::qcnn_gradient(trace.split.qcnn_segments[q], qp, upstream);
    auto gq = gslice("qcnn" + std::to_string(q));
    for (std::size_t j = 0; j < gq.size(); ++j) gq[j] = qg[j];
  }
  std::vector<double> dc(d.begin() + qdim, d.end());
  dc = nn::dropout_backward(trace.dropout_mask, dc);

  for (int i = static_cast<int>(spec.conv_layers.size()) - 1; i >= 0; --i) {
    const std::string tag = "conv" + std::to_string(i + 1);
    dc = nn::relu_backward(trace.conv_pre[i], dc);
    auto g = nn::conv1d_backward(spec.conv_layers[i], slice(tag + ".w"),
                                 trace.conv_inputs[i],
                                 spec.conv_input_lens[i], dc);
    auto gw = gslice(tag + ".w");
    auto gb = gslice(tag + ".b");
    for (std::size_t j = 0; j < gw.size(); ++j) gw[j] = g.dw[j];
    for (std::size_t j = 0; j < gb.size(); ++j) gb[j] = g.db[j];
    dc = std::move(g.dx);
  }
  return grads;
}

// --- checkpoint i/o ---------------------------------------------------------
// Binary: 8-byte magic "QFMRIPK1", kind name (u8 length + bytes), u64 count,
// count little-endian doubles. JSON sidecar (<path>.json) carries the slice
// map.

inline void save_checkpoint(const std::string& path, const ModelSpec& spec,
                            const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_checkpoint: cannot open " + path);
  const char magic[8] = {'Q', 'F', 'M', 'R', 'I', 'P', 'K', '1'};
  out.write(magic, 8);
  const std::string name = kind_name(spec.kind);
  const std::uint8_t nlen = static_cast<std::uint8_t>(name.size());
  out.write(reinterpret_cast<const char*>(&nlen), 1);
  out.write(name.data(), nlen);
  const std::uint64_t count = params.values.size();
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(params.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));

  nlohmann::json j;
  j["kind"] = name;
  j["count"] = count;
  auto& slices = j["slices"];
  for (const auto& s : param_layout(spec))
    slices.push_back({{"name", s.name}, {"offset", s.offset}, {"len", s.len}});
  std::ofstream side(path + ".json");
  side << j.dump(2) << "\n";
}

inline std::pair<ModelSpec, ModelParams> load_checkpoint(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "QFMRIPK1")
    throw ParseError("load_checkpoint: bad magic in " + path);
  std::uint8_t nlen = 0;
  in.read(reinterpret_cast<char*>(&nlen), 1);
  std::string name(nlen, '\0');
  in.read(name.data(), nlen);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  ModelSpec spec = make_spec(kind_from_name(name));
  if (count != count_parameters(spec))
    throw ParseError("load_checkpoint: parameter count mismatch");
  ModelParams params;
  params.values.resize(count);
  in.read(reinterpret_cast<char*>(params.values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw ParseError("load_checkpoint: truncated file " + path);
  return {spec, params};
}

}  // namespace qfmri::model
