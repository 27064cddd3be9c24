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

#include "apg/tape.hpp"

#include <cmath>
#include <cstddef>
#include <string>

namespace apg {

namespace {

bool broadcast_compatible(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) || a.is_scalar() || b.is_scalar();
}

// Shape of an elementwise binary result under scalar broadcasting.
const Tensor& wide(const Tensor& a, const Tensor& b) { return a.is_scalar() ? b : a; }

double broadcast_at(const Tensor& t, int i) { return t.is_scalar() ? t.data[0] : t[i]; }

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kInput: return "input";
    case OpKind::kConstant: return "constant";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kNeg: return "neg";
    case OpKind::kSin: return "sin";
    case OpKind::kCos: return "cos";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kExp: return "exp";
    case OpKind::kAtan2: return "atan2";
    case OpKind::kPower: return "power";
    case OpKind::kSum: return "sum";
    case OpKind::kDot: return "dot";
    case OpKind::kMatvec: return "matvec";
    case OpKind::kSlice: return "slice";
    case OpKind::kConcat: return "concat";
    case OpKind::kClamp: return "clamp";
  }
  return "unknown";
}

const Tensor& Val::value() const {
  if (!valid()) throw InvalidOperationError("value() on empty Val handle");
  return tape->value(id);
}

const Tensor& Adjoints::of(NodeId id) const {
  if (id < 0 || static_cast<size_t>(id) >= adj_.size())
    throw InvalidOperationError("adjoint query for unknown node");
  Tensor& slot = adj_[static_cast<size_t>(id)];
  if (slot.empty()) {
    const Tensor& v = tape_->value(id);
    slot = Tensor::zeros(v.rows, v.cols);
  }
  return slot;
}

Val Tape::variable(Tensor v) {
  TapeNode n;
  n.op = OpKind::kInput;
  n.value = std::move(v);
  nodes_.push_back(std::move(n));
  NodeId id = static_cast<NodeId>(nodes_.size() - 1);
  variable_ids_.push_back(id);
  return Val{this, id};
}

Val Tape::constant(Tensor v) {
  TapeNode n;
  n.op = OpKind::kConstant;
  n.value = std::move(v);
  nodes_.push_back(std::move(n));
  return Val{this, static_cast<NodeId>(nodes_.size() - 1)};
}

void Tape::check_parents(std::span<const NodeId> parents, size_t arity_min,
                         size_t arity_max) const {
  if (parents.size() < arity_min || parents.size() > arity_max)
    throw InvalidOperationError("wrong operand count");
  const NodeId self = static_cast<NodeId>(nodes_.size());
  for (NodeId p : parents) {
    if (p < 0 || p >= self)
      throw InvalidOperationError("operand is not an earlier tape node");
  }
}

std::size_t Tape::count_ops(OpKind op) const {
  std::size_t n = 0;
  for (const TapeNode& node : nodes_)
    if (node.op == op) ++n;
  return n;
}

void Tape::clear() {
  nodes_.clear();
  variable_ids_.clear();
}

Val Tape::record(OpKind op, std::span<const NodeId> parents, OpAttr attr) {
  TapeNode n;
  n.op = op;
  n.attr = attr;
  std::vector<Tensor> partials;
  n.value = evaluate(op, parents, attr, partials);
  n.parent_ids.assign(parents.begin(), parents.end());
  partials.resize(parents.size());
  n.local_partials = std::move(partials);
  nodes_.push_back(std::move(n));
  return Val{this, static_cast<NodeId>(nodes_.size() - 1)};
}

Tensor Tape::evaluate(OpKind op, std::span<const NodeId> parents, const OpAttr& attr,
                      std::vector<Tensor>& partials) const {
  auto val = [&](size_t k) -> const Tensor& {
    return nodes_[static_cast<size_t>(parents[k])].value;
  };

  switch (op) {
    case OpKind::kInput:
    case OpKind::kConstant:
      throw InvalidOperationError("leaf nodes are created via variable()/constant()");

    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kDiv: {
      check_parents(parents, 2, 2);
      const Tensor& a = val(0);
      const Tensor& b = val(1);
      if (!broadcast_compatible(a, b))
        throw ShapeError(std::string(op_name(op)) + ": shape mismatch");
      const Tensor& w = wide(a, b);
      Tensor out(w.rows, w.cols);
      for (int i = 0; i < out.size(); ++i) {
        double x = broadcast_at(a, i);
        double y = broadcast_at(b, i);
        switch (op) {
          case OpKind::kAdd: out[i] = x + y; break;
          case OpKind::kSub: out[i] = x - y; break;
          case OpKind::kMul: out[i] = x * y; break;
          default: out[i] = x / y; break;
        }
      }
      return out;
    }

    case OpKind::kNeg: {
      check_parents(parents, 1, 1);
      Tensor out = val(0);
      for (double& v : out.data) v = -v;
      return out;
    }

    case OpKind::kSin:
    case OpKind::kCos:
    case OpKind::kTanh:
    case OpKind::kSigmoid:
    case OpKind::kExp:
    case OpKind::kPower:
    case OpKind::kClamp: {
      check_parents(parents, 1, 1);
      const Tensor& x = val(0);
      Tensor out(x.rows, x.cols);
      Tensor partial(x.rows, x.cols);
      for (int i = 0; i < x.size(); ++i) {
        double v = x[i];
        switch (op) {
          case OpKind::kSin:
            out[i] = std::sin(v);
            partial[i] = std::cos(v);
            break;
          case OpKind::kCos:
            out[i] = std::cos(v);
            partial[i] = -std::sin(v);
            break;
          case OpKind::kTanh: {
            double t = std::tanh(v);
            out[i] = t;
            partial[i] = 1.0 - t * t;
            break;
          }
          case OpKind::kSigmoid: {
            double s = 1.0 / (1.0 + std::exp(-v));
            out[i] = s;
            partial[i] = s * (1.0 - s);
            break;
          }
          case OpKind::kExp: {
            double e = std::exp(v);
            out[i] = e;
            partial[i] = e;
            break;
          }
          case OpKind::kPower: {
            double p = attr.a;
            if (p == 2.0) {
              out[i] = v * v;
              partial[i] = 2.0 * v;
            } else if (p == 0.5) {
              out[i] = std::sqrt(v);
              partial[i] = 0.5 / std::sqrt(v);
            } else {
              out[i] = std::pow(v, p);
              partial[i] = p * std::pow(v, p - 1.0);
            }
            break;
          }
          default: {  // clamp; straight-through estimation stays off
            bool inside = v >= attr.a && v <= attr.b;
            out[i] = inside ? v : (v < attr.a ? attr.a : attr.b);
            partial[i] = inside ? 1.0 : 0.0;
            break;
          }
        }
      }
      partials.push_back(std::move(partial));
      return out;
    }

    case OpKind::kAtan2: {
      check_parents(parents, 2, 2);
      const Tensor& y = val(0);
      const Tensor& x = val(1);
      if (!y.same_shape(x)) throw ShapeError("atan2: shape mismatch");
      Tensor out(y.rows, y.cols);
      Tensor py(y.rows, y.cols);
      Tensor px(y.rows, y.cols);
      for (int i = 0; i < out.size(); ++i) {
        out[i] = std::atan2(y[i], x[i]);
        double d = x[i] * x[i] + y[i] * y[i];
        py[i] = x[i] / d;
        px[i] = -y[i] / d;
      }
      partials.push_back(std::move(py));
      partials.push_back(std::move(px));
      return out;
    }

    case OpKind::kSum: {
      check_parents(parents, 1, 1);
      double s = 0.0;
      for (double v : val(0).data) s += v;
      return Tensor::scalar(s);
    }

    case OpKind::kDot: {
      check_parents(parents, 2, 2);
      const Tensor& a = val(0);
      const Tensor& b = val(1);
      if (a.size() != b.size()) throw ShapeError("dot: size mismatch");
      double s = 0.0;
      for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
      return Tensor::scalar(s);
    }

    case OpKind::kMatvec: {
      check_parents(parents, 2, 2);
      const Tensor& w = val(0);
      const Tensor& x = val(1);
      if (w.cols != x.size()) throw ShapeError("matvec: inner dimension mismatch");
      Tensor out(w.rows, 1);
      for (int r = 0; r < w.rows; ++r) {
        double s = 0.0;
        const double* row = w.data.data() + static_cast<size_t>(r) * w.cols;
        for (int c = 0; c < w.cols; ++c) s += row[c] * x[c];
        out[r] = s;
      }
      return out;
    }

    case OpKind::kSlice: {
      check_parents(parents, 1, 1);
      const Tensor& x = val(0);
      if (attr.i < 0 || attr.j < 0 || attr.i + attr.j > x.size())
        throw ShapeError("slice: window out of range");
      Tensor out(attr.j, 1);
      for (int i = 0; i < attr.j; ++i) out[i] = x[attr.i + i];
      return out;
    }

    case OpKind::kConcat: {
      check_parents(parents, 1, std::numeric_limits<size_t>::max());
      int total = 0;
      for (size_t k = 0; k < parents.size(); ++k) total += val(k).size();
      Tensor out(total, 1);
      int at = 0;
      for (size_t k = 0; k < parents.size(); ++k) {
        const Tensor& part = val(k);
        for (int i = 0; i < part.size(); ++i) out[at++] = part[i];
      }
      return out;
    }
  }
  throw InvalidOperationError("unknown op kind " +
                              std::to_string(static_cast<int>(op)));
}

Adjoints Tape::backward(NodeId loss, bool check_finite) const {
  if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size())
    throw InvalidOperationError("backward: unknown loss node");
  if (!nodes_[static_cast<size_t>(loss)].value.is_scalar())
    throw ShapeError("backward: loss node must hold a scalar");

  std::vector<Tensor> adj(nodes_.size());
  adj[static_cast<size_t>(loss)] = Tensor::scalar(1.0);

  // Materializes the parent slot on first touch.
  auto slot = [&](NodeId p) -> Tensor& {
    Tensor& t = adj[static_cast<size_t>(p)];
    if (t.empty()) {
      const Tensor& v = nodes_[static_cast<size_t>(p)].value;
      t = Tensor::zeros(v.rows, v.cols);
    }
    return t;
  };
  // Accumulates an output-shaped gradient into a possibly scalar parent.
  auto accum = [&](NodeId p, const Tensor& g) {
    Tensor& t = slot(p);
    if (t.same_shape(g)) {
      for (int i = 0; i < g.size(); ++i) t[i] += g[i];
    } else {  // scalar parent under broadcasting
      double s = 0.0;
      for (double v : g.data) s += v;
      t[0] += s;
    }
  };

  for (NodeId id = loss; id >= 0; --id) {
    const Tensor& g = adj[static_cast<size_t>(id)];
    if (g.empty()) continue;
    const TapeNode& n = nodes_[static_cast<size_t>(id)];
    if (check_finite && !g.all_finite())
      throw NumericalError("non-finite adjoint at node " + std::to_string(id) +
                               " (" + op_name(n.op) + ")",
                           id);
    auto pval = [&](size_t k) -> const Tensor& {
      return nodes_[static_cast<size_t>(n.parent_ids[k])].value;
    };

    switch (n.op) {
      case OpKind::kInput:
      case OpKind::kConstant:
        break;

      case OpKind::kAdd:
        accum(n.parent_ids[0], g);
        accum(n.parent_ids[1], g);
        break;

      case OpKind::kSub: {
        accum(n.parent_ids[0], g);
        Tensor neg = g;
        for (double& v : neg.data) v = -v;
        accum(n.parent_ids[1], neg);
        break;
      }

      case OpKind::kMul: {
        const Tensor& a = pval(0);
        const Tensor& b = pval(1);
        Tensor ga = g;
        for (int i = 0; i < ga.size(); ++i) ga[i] *= broadcast_at(b, i);
        accum(n.parent_ids[0], ga);
        Tensor gb = g;
        for (int i = 0; i < gb.size(); ++i) gb[i] *= broadcast_at(a, i);
        accum(n.parent_ids[1], gb);
        break;
      }

      case OpKind::kDiv: {
        const Tensor& b = pval(1);
        Tensor ga = g;
        for (int i = 0; i < ga.size(); ++i) ga[i] /= broadcast_at(b, i);
        accum(n.parent_ids[0], ga);
        Tensor gb = g;  // d/db (a/b) = -y/b
        for (int i = 0; i < gb.size(); ++i)
          gb[i] *= -n.value[i] / broadcast_at(b, i);
        accum(n.parent_ids[1], gb);
        break;
      }

      case OpKind::kNeg: {
        Tensor ga = g;
        for (double& v : ga.data) v = -v;
        accum(n.parent_ids[0], ga);
        break;
      }

      case OpKind::kSin:
      case OpKind::kCos:
      case OpKind::kTanh:
      case OpKind::kSigmoid:
      case OpKind::kExp:
      case OpKind::kPower:
      case OpKind::kClamp: {
        const Tensor& partial = n.local_partials[0];
        Tensor ga = g;
        for (int i = 0; i < ga.size(); ++i) ga[i] *= partial[i];
        accum(n.parent_ids[0], ga);
        break;
      }

      case OpKind::kAtan2: {
        for (size_t k = 0; k < 2; ++k) {
          const Tensor& partial = n.local_partials[k];
          Tensor gk = g;
          for (int i = 0; i < gk.size(); ++i) gk[i] *= partial[i];
          accum(n.parent_ids[k], gk);
        }
        break;
      }

      case OpKind::kSum: {
        const Tensor& x = pval(0);
        Tensor ga(x.rows, x.cols);
        for (double& v : ga.data) v = g[0];
        accum(n.parent_ids[0], ga);
        break;
      }

      case OpKind::kDot: {
        const Tensor& a = pval(0);
        const Tensor& b = pval(1);
        Tensor ga = b;
        for (double& v : ga.data) v *= g[0];
        ga.rows = a.rows;
        ga.cols = a.cols;
        accum(n.parent_ids[0], ga);
        Tensor gb = a;
        for (double& v : gb.data) v *= g[0];
        gb.rows = b.rows;
        gb.cols = b.cols;
        accum(n.parent_ids[1], gb);
        break;
      }

      case OpKind::kMatvec: {
        const Tensor& w = pval(0);
        const Tensor& x = pval(1);
        Tensor& gw = slot(n.parent_ids[0]);
        Tensor& gx = slot(n.parent_ids[1]);
        for (int r = 0; r < w.rows; ++r) {
          double gr = g[r];
          double* gw_row = gw.data.data() + static_cast<size_t>(r) * w.cols;
          const double* w_row = w.data.data() + static_cast<size_t>(r) * w.cols;
          for (int c = 0; c < w.cols; ++c) {
            gw_row[c] += gr * x[c];
            gx[c] += gr * w_row[c];
          }
        }
        break;
      }

      case OpKind::kSlice: {
        Tensor& gx = slot(n.parent_ids[0]);
        for (int i = 0; i < n.attr.j; ++i) gx[n.attr.i + i] += g[i];
        break;
      }

      case OpKind::kConcat: {
        int at = 0;
        for (size_t k = 0; k < n.parent_ids.size(); ++k) {
          Tensor& gk = slot(n.parent_ids[k]);
          for (int i = 0; i < gk.size(); ++i) gk[i] += g[at++];
        }
        break;
      }
    }
  }

  if (check_finite) {
    for (NodeId v : variable_ids_) {
      const Tensor& t = adj[static_cast<size_t>(v)];
      if (!t.empty() && !t.all_finite())
        throw NumericalError("non-finite adjoint at variable node " +
                                 std::to_string(v),
                             v);
    }
  }
  return Adjoints(this, std::move(adj));
}

// ---- expression helpers -------------------------------------------------

namespace {
Tape& same_tape(Val a, Val b) {
  if (a.tape != b.tape || a.tape == nullptr)
    throw InvalidOperationError("operands live on different tapes");
  return *a.tape;
}
}  // namespace

Val operator+(Val a, Val b) { return same_tape(a, b).record(OpKind::kAdd, {a.id, b.id}); }
Val operator-(Val a, Val b) { return same_tape(a, b).record(OpKind::kSub, {a.id, b.id}); }
Val operator*(Val a, Val b) { return same_tape(a, b).record(OpKind::kMul, {a.id, b.id}); }
Val operator/(Val a, Val b) { return same_tape(a, b).record(OpKind::kDiv, {a.id, b.id}); }
Val operator-(Val a) { return a.tape->record(OpKind::kNeg, {a.id}); }
Val operator+(Val a, double b) { return a + a.tape->constant(b); }
Val operator+(double a, Val b) { return b.tape->constant(a) + b; }
Val operator-(Val a, double b) { return a - a.tape->constant(b); }
Val operator-(double a, Val b) { return b.tape->constant(a) - b; }
Val operator*(Val a, double b) { return a * a.tape->constant(b); }
Val operator*(double a, Val b) { return b.tape->constant(a) * b; }
Val operator/(Val a, double b) { return a / a.tape->constant(b); }
Val operator/(double a, Val b) { return b.tape->constant(a) / b; }

Val sin(Val x) { return x.tape->record(OpKind::kSin, {x.id}); }
Val cos(Val x) { return x.tape->record(OpKind::kCos, {x.id}); }
Val tanh(Val x) { return x.tape->record(OpKind::kTanh, {x.id}); }
Val sigmoid(Val x) { return x.tape->record(OpKind::kSigmoid, {x.id}); }
Val exp(Val x) { return x.tape->record(OpKind::kExp, {x.id}); }
Val atan2(Val y, Val x) { return same_tape(y, x).record(OpKind::kAtan2, {y.id, x.id}); }
Val pow(Val x, double p) { return x.tape->record(OpKind::kPower, {x.id}, {.a = p}); }
Val sqrt(Val x) { return pow(x, 0.5); }
Val sum(Val x) { return x.tape->record(OpKind::kSum, {x.id}); }
Val dot(Val a, Val b) { return same_tape(a, b).record(OpKind::kDot, {a.id, b.id}); }
Val matvec(Val w, Val x) { return same_tape(w, x).record(OpKind::kMatvec, {w.id, x.id}); }

Val slice(Val x, int offset, int len) {
  return x.tape->record(OpKind::kSlice, {x.id}, {.i = offset, .j = len});
}
Val elem(Val x, int index) { return slice(x, index, 1); }

Val concat(std::span<const Val> parts) {
  if (parts.empty()) throw InvalidOperationError("concat of nothing");
  std::vector<NodeId> ids;
  ids.reserve(parts.size());
  Tape* tape = parts[0].tape;
  for (const Val& v : parts) {
    if (v.tape != tape) throw InvalidOperationError("concat across tapes");
    ids.push_back(v.id);
  }
  return tape->record(OpKind::kConcat, std::span<const NodeId>(ids));
}
Val concat(std::initializer_list<Val> parts) {
  return concat(std::span<const Val>(parts.begin(), parts.size()));
}

Val clamp(Val x, double lo, double hi) {
  return x.tape->record(OpKind::kClamp, {x.id}, {.a = lo, .b = hi});
}
Val relu_floor(Val x) {
  return clamp(x, 0.0, std::numeric_limits<double>::infinity());
}
Val squared_norm(Val x) { return dot(x, x); }
Val norm(Val x, double floor) {
  return sqrt(clamp(squared_norm(x), floor, std::numeric_limits<double>::infinity()));
}

}  // namespace apg
