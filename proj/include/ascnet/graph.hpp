#pragma once

#include <cstddef>
#include <string>

#include "ascnet/autodiff.hpp"

namespace ascnet {

/// Which progress levels a node may aggregate from.
enum class MaskKind {
  TeacherBidirectional,  ///< every level sees every other level
  StudentCausal,         ///< level i sees levels j <= i only
  Diagonal,              ///< each level sees only itself
};

const char* mask_kind_name(MaskKind kind);
MaskKind parse_mask_kind(const std::string& name);

template <typename Scalar>
Matrix<Scalar> make_mask(MaskKind kind, Index n) {
  if (n < 1) throw ParameterError("make_mask: need at least one node, got " + std::to_string(n));
  switch (kind) {
    case MaskKind::TeacherBidirectional:
      return Matrix<Scalar>::Ones(n, n);
    case MaskKind::StudentCausal: {
      Matrix<Scalar> m = Matrix<Scalar>::Zero(n, n);
      m.template triangularView<Eigen::Lower>().setOnes();
      return m;
    }
    case MaskKind::Diagonal:
      return Matrix<Scalar>::Identity(n, n);
  }
  throw ParameterError("make_mask: unknown mask kind");
}

/// Learnable adjacency of one graph layer: a fixed mask pattern plus the index
/// of the trainable matrix in the model's parameter list.
struct AdjacencySpec {
  MaskKind mask = MaskKind::TeacherBidirectional;
  std::size_t learnable = 0;
};

/// Pairwise cosine similarity between the rows of every n-row block of f.
/// Pairs involving a row of norm below 1e-12 have similarity 0.
template <typename Scalar>
Var<Scalar> cosine_similarity(const Var<Scalar>& f, Index n) {
  return block_gram(normalize_rows(f), n);
}

template <typename Scalar>
Var<Scalar> cosine_similarity(const Var<Scalar>& f) {
  return cosine_similarity(f, f.rows());
}

/// mask ⊙ learnable ⊙ S(f) for every n-row block of f, stacked as (B*n) x n.
/// With stop_gradient the similarity term is treated as a constant.
template <typename Scalar>
Var<Scalar> compose_adjacency(const Matrix<Scalar>& mask, const Var<Scalar>& learnable, const Var<Scalar>& f,
                              bool stop_gradient = false) {
  const Index n = mask.rows();
  if (mask.cols() != n || learnable.rows() != n || learnable.cols() != n) {
    throw ShapeError("compose_adjacency: mask " + shape_string(mask) + " and learnable " +
                     shape_string(learnable.rows(), learnable.cols()) + " must both be square of the same size");
  }
  if (f.rows() % n != 0) {
    throw ShapeError("compose_adjacency: features " + shape_string(f.rows(), f.cols()) + " do not hold blocks of " +
                     std::to_string(n) + " nodes");
  }
  Var<Scalar> similarity = cosine_similarity(stop_gradient ? detach(f) : f, n);
  Var<Scalar> masked = hadamard(learnable.tape().constant(mask), learnable);
  return hadamard(tile_rows(masked, f.rows() / n), similarity);
}

}  // namespace ascnet
