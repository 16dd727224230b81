#pragma once

#include <span>
#include <string>
#include <vector>

#include "ascnet/graph.hpp"
#include "ascnet/nn_ops.hpp"

namespace ascnet {

template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
};

/// F' = A F W with A composed from the layer's adjacency spec and its input F.
struct GcLayer {
  std::size_t weight = 0;
  AdjacencySpec adjacency;
};

/// dropout(relu(batch_norm(gc(F)))).
struct GUnit {
  GcLayer gc;
  std::size_t gamma = 0;
  std::size_t beta = 0;
  std::size_t stats = 0;
  double dropout_p = 0.0;
};

/// Densely connected pair of g units:
///   dense:  outer(inner(F) + F) + (inner(F) + F) + F
///   plain:  outer(inner(F))
struct DgcBlock {
  GUnit inner;
  GUnit outer;
  bool dense = true;
};

/// Everything a layer forward needs beyond its own indices.
template <typename Scalar>
struct LayerContext {
  std::span<const Var<Scalar>> params;           ///< parameters bound on the tape, by index
  std::span<BatchNormStats<Scalar>> stats;       ///< updated in Train mode
  ComputeMode mode = ComputeMode::Eval;
  Rng* rng = nullptr;                            ///< dropout source, Train mode only
  bool similarity_stop_gradient = false;
  BatchNormOptions bn;
};

template <typename Scalar>
Var<Scalar> gc_forward(const GcLayer& layer, const Var<Scalar>& f, const LayerContext<Scalar>& ctx) {
  const Var<Scalar>& w = ctx.params[layer.weight];
  const Var<Scalar>& aprime = ctx.params[layer.adjacency.learnable];
  if (f.cols() != w.rows()) {
    throw ShapeError("gc_forward: features " + shape_string(f.rows(), f.cols()) + " do not match weight " +
                     shape_string(w.rows(), w.cols()));
  }
  const Matrix<Scalar> mask = make_mask<Scalar>(layer.adjacency.mask, aprime.rows());
  Var<Scalar> adjacency = compose_adjacency(mask, aprime, f, ctx.similarity_stop_gradient);
  return block_matmul(adjacency, matmul(f, w));
}

template <typename Scalar>
Var<Scalar> g_forward(const GUnit& unit, const Var<Scalar>& f, const LayerContext<Scalar>& ctx) {
  Var<Scalar> h = gc_forward(unit.gc, f, ctx);
  h = batch_norm(h, ctx.params[unit.gamma], ctx.params[unit.beta], ctx.stats[unit.stats], ctx.mode, ctx.bn);
  h = relu(h);
  if (ctx.mode == ComputeMode::Train && unit.dropout_p > 0.0) {
    if (ctx.rng == nullptr) throw ParameterError("g_forward: Train mode with dropout needs a generator");
    h = dropout(h, unit.dropout_p, ctx.mode, *ctx.rng);
  }
  return h;
}

template <typename Scalar>
Var<Scalar> dgc_forward(const DgcBlock& block, const Var<Scalar>& f, const LayerContext<Scalar>& ctx) {
  const Index in_width = ctx.params[block.inner.gc.weight].rows();
  const Index inner_out = ctx.params[block.inner.gc.weight].cols();
  const Index outer_out = ctx.params[block.outer.gc.weight].cols();
  if (f.cols() != in_width || inner_out != in_width || outer_out != in_width) {
    throw ShapeError("dgc_forward: block widths " + std::to_string(inner_out) + "/" + std::to_string(outer_out) +
                     " must equal the feature width " + std::to_string(f.cols()));
  }
  if (!block.dense) return g_forward(block.outer, g_forward(block.inner, f, ctx), ctx);
  Var<Scalar> mid = g_forward(block.inner, f, ctx) + f;
  return (g_forward(block.outer, mid, ctx) + mid) + f;
}

}  // namespace ascnet
