// Copyright 2026 The apg-control Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tape-based reverse-mode automatic differentiation over scalar/vector
// primitives. A tape is an append-only, topologically ordered DAG of
// eagerly evaluated nodes; backward() accumulates adjoints by the chain
// rule without mutating the tape, so several losses can be
// differentiated from the same recording.

#ifndef APG_TAPE_HPP_
#define APG_TAPE_HPP_

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "apg/errors.hpp"
#include "apg/tensor.hpp"

namespace apg {

using NodeId = std::int32_t;

enum class OpKind : std::uint8_t {
  kInput,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kSin,
  kCos,
  kTanh,
  kSigmoid,
  kExp,
  kAtan2,
  kPower,    // elementwise x^p, constant exponent in attr.a
  kSum,      // reduce to scalar
  kDot,
  kMatvec,
  kSlice,    // contiguous window [attr.i, attr.i + attr.j) of the flat data
  kConcat,
  kClamp,    // clamp to [attr.a, attr.b]; zero gradient where clamped
};

const char* op_name(OpKind op);

// Scalar attributes for ops that need them (exponent, bounds, window).
struct OpAttr {
  double a = 0.0;
  double b = 0.0;
  int i = 0;
  int j = 0;
};

struct TapeNode {
  OpKind op;
  std::vector<NodeId> parent_ids;  // reference only earlier nodes
  OpAttr attr;
  Tensor value;
  // One slot per parent. Unary elementwise rules cache their partial
  // derivative here; bilinear/structural rules leave the slot empty and
  // read parent values (or the op structure) during the reverse pass.
  std::vector<Tensor> local_partials;
};

class Tape;

// Lightweight handle to a tape node. Arithmetic on handles records new
// nodes on the owning tape.
struct Val {
  Tape* tape = nullptr;
  NodeId id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  int size() const { return value().size(); }
  double scalar() const { return value().scalar_value(); }
};

// Result of one backward pass. Nodes the loss does not reach carry a
// zero adjoint of the node's shape.
class Adjoints {
 public:
  Adjoints(const Tape* tape, std::vector<Tensor> adj)
      : tape_(tape), adj_(std::move(adj)) {}

  const Tensor& of(NodeId id) const;
  const Tensor& of(const Val& v) const { return of(v.id); }

 private:
  const Tape* tape_;
  mutable std::vector<Tensor> adj_;
};

class Tape {
 public:
  // Leaf nodes. variable() marks the node as a differentiation root.
  Val variable(Tensor v);
  Val constant(Tensor v);
  Val constant(double v) { return constant(Tensor::scalar(v)); }

  // Generic recorder: validates parents/shapes, evaluates eagerly,
  // appends the node. Unknown op kinds raise InvalidOperationError.
  Val record(OpKind op, std::span<const NodeId> parents, OpAttr attr = {});
  Val record(OpKind op, std::initializer_list<NodeId> parents, OpAttr attr = {}) {
    return record(op, std::span<const NodeId>(parents.begin(), parents.size()), attr);
  }

  std::size_t node_count() const { return nodes_.size(); }
  const TapeNode& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
  const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  std::span<const NodeId> variable_ids() const { return variable_ids_; }
  std::size_t count_ops(OpKind op) const;

  // Drops all nodes but keeps the arena capacity for reuse.
  void clear();

  // Reverse pass from a scalar loss node. With check_finite set, a
  // non-finite adjoint raises NumericalError carrying the node id.
  Adjoints backward(NodeId loss, bool check_finite = false) const;
  Adjoints backward(const Val& loss, bool check_finite = false) const {
    return backward(loss.id, check_finite);
  }

 private:
  Tensor evaluate(OpKind op, std::span<const NodeId> parents, const OpAttr& attr,
                  std::vector<Tensor>& partials) const;
  void check_parents(std::span<const NodeId> parents, size_t arity_min,
                     size_t arity_max) const;

  std::vector<TapeNode> nodes_;
  std::vector<NodeId> variable_ids_;
};

// ---- expression helpers -------------------------------------------------

Val operator+(Val a, Val b);
Val operator-(Val a, Val b);
Val operator*(Val a, Val b);
Val operator/(Val a, Val b);
Val operator-(Val a);
Val operator+(Val a, double b);
Val operator+(double a, Val b);
Val operator-(Val a, double b);
Val operator-(double a, Val b);
Val operator*(Val a, double b);
Val operator*(double a, Val b);
Val operator/(Val a, double b);
Val operator/(double a, Val b);

Val sin(Val x);
Val cos(Val x);
Val tanh(Val x);
Val sigmoid(Val x);
Val exp(Val x);
Val atan2(Val y, Val x);
Val pow(Val x, double p);
Val sqrt(Val x);
Val sum(Val x);
Val dot(Val a, Val b);
Val matvec(Val w, Val x);
Val slice(Val x, int offset, int len);
Val elem(Val x, int index);  // length-1 slice
Val concat(std::span<const Val> parts);
Val concat(std::initializer_list<Val> parts);
Val clamp(Val x, double lo, double hi);
Val relu_floor(Val x);                  // clamp(x, 0, +inf)
Val squared_norm(Val x);                // dot(x, x)
Val norm(Val x, double floor = 1e-12);  // sqrt of floored squared norm

}  // namespace apg

#endif  // APG_TAPE_HPP_
