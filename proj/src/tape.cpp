#include "slotfill/tape.hpp"

#include <algorithm>
#include <cmath>

#include "slotfill/kernels.hpp"
#include "slotfill/nn.hpp"

namespace slotfill {

NodeRef Tape::push(Tensor value, std::function<void(Tape&)> backward) {
  nodes_.push_back(Node{std::move(value), std::move(backward), nullptr});
  return NodeRef{(int)nodes_.size() - 1};
}

Tensor& Tape::grad_buf(int id) {
  if (grads_.size() < nodes_.size()) grads_.resize(nodes_.size());
  Tensor& g = grads_[id];
  if (g.data.empty() && !nodes_[id].value.data.empty()) g = Tensor::zeros(nodes_[id].value.shape);
  return g;
}

const Tensor& Tape::value(NodeRef r) const { return nodes_.at(r.id).value; }

const Tensor& Tape::grad(NodeRef r) const {
  if (!backward_done_) throw StateError("grad: backward() has not run");
  return grads_.at(r.id);
}

NodeRef Tape::constant(Tensor v) { return push(std::move(v)); }

NodeRef Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return NodeRef{it->second};
  NodeRef r = push(p.value);
  nodes_[r.id].param = &p;
  param_nodes_[&p] = r.id;
  param_order_.push_back(r.id);
  return r;
}

NodeRef Tape::affine(NodeRef x, NodeRef W, NodeRef b) {
  const Tensor& xv = val(x.id);
  const Tensor& Wv = val(W.id);
  const Tensor& bv = val(b.id);
  if (Wv.rank() != 2 || xv.rank() != 1 || bv.rank() != 1 || xv.size() != Wv.rows() ||
      bv.size() != Wv.cols())
    throw DimensionError("affine: x" + xv.shape_str() + " W" + Wv.shape_str() + " b" +
                         bv.shape_str());
  std::size_t d = Wv.rows(), n = Wv.cols();
  Tensor y = Tensor::zeros({n});
  kernels::vecmat(xv.data.data(), Wv.data.data(), bv.data.data(), y.data.data(), d, n);
  NodeRef r = push(std::move(y));
  int out = r.id, xi = x.id, wi = W.id, bi = b.id;
  nodes_[out].backward = [out, xi, wi, bi, d, n](Tape& t) {
    const Tensor& g = t.grads_[out];
    const Tensor& Wv2 = t.val(wi);
    const Tensor& xv2 = t.val(xi);
    // dW[i,j] += x[i] g[j]; dx[i] += sum_j W[i,j] g[j]; db += g
    kernels::outer_acc(xv2.data.data(), g.data.data(), t.grad_buf(wi).data.data(), d, n);
    Tensor& gx = t.grad_buf(xi);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      const double* row = Wv2.data.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * g.data[j];
      gx.data[i] += acc;
    }
    Tensor& gb = t.grad_buf(bi);
    for (std::size_t j = 0; j < n; ++j) gb.data[j] += g.data[j];
  };
  return r;
}

NodeRef Tape::matvec(NodeRef W, NodeRef x) {
  const Tensor& Wv = val(W.id);
  const Tensor& xv = val(x.id);
  if (Wv.rank() != 2 || xv.rank() != 1 || Wv.cols() != xv.size())
    throw DimensionError("matvec: W" + Wv.shape_str() + " x" + xv.shape_str());
  std::size_t m = Wv.rows(), n = Wv.cols();
  Tensor y = Tensor::zeros({m});
  kernels::matvec(Wv.data.data(), xv.data.data(), y.data.data(), m, n);
  NodeRef r = push(std::move(y));
  int out = r.id, wi = W.id, xi = x.id;
  nodes_[out].backward = [out, wi, xi, m, n](Tape& t) {
    const Tensor& g = t.grads_[out];
    const Tensor& Wv2 = t.val(wi);
    const Tensor& xv2 = t.val(xi);
    kernels::outer_acc(g.data.data(), xv2.data.data(), t.grad_buf(wi).data.data(), m, n);
    kernels::matvec_t_acc(Wv2.data.data(), g.data.data(), t.grad_buf(xi).data.data(), m, n);
  };
  return r;
}

NodeRef Tape::add(NodeRef a, NodeRef b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  require_same_shape(av, bv, "add");
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += bv.data[i];
  NodeRef r = push(std::move(y));
  int out = r.id, ai = a.id, bi = b.id;
  nodes_[out].backward = [out, ai, bi](Tape& t) {
    const Tensor& g = t.grads_[out];
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
    Tensor& gb = t.grad_buf(bi);
    for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i];
  };
  return r;
}

NodeRef Tape::mul(NodeRef a, NodeRef b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  require_same_shape(av, bv, "mul");
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= bv.data[i];
  NodeRef r = push(std::move(y));
  int out = r.id, ai = a.id, bi = b.id;
  nodes_[out].backward = [out, ai, bi](Tape& t) {
    const Tensor& g = t.grads_[out];
    const Tensor& av2 = t.val(ai);
    const Tensor& bv2 = t.val(bi);
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * bv2.data[i];
    Tensor& gb = t.grad_buf(bi);
    for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * av2.data[i];
  };
  return r;
}

NodeRef Tape::scale(NodeRef x, double c) {
  Tensor y = val(x.id);
  for (double& v : y.data) v *= c;
  NodeRef r = push(std::move(y));
  int out = r.id, xi = x.id;
  nodes_[out].backward = [out, xi, c](Tape& t) {
    const Tensor& g = t.grads_[out];
    Tensor& gx = t.grad_buf(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += c * g.data[i];
  };
  return r;
}

NodeRef Tape::sigmoid(NodeRef x) {
  Tensor y = val(x.id);
  for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
  NodeRef r = push(std::move(y));
  int out = r.id, xi = x.id;
  nodes_[out].backward = [out, xi](Tape& t) {
    const Tensor& g = t.grads_[out];
    const Tensor& yv = t.val(out);
    Tensor& gx = t.grad_buf(xi);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx.data[i] += g.data[i] * yv.data[i] * (1.0 - yv.data[i]);
  };
  return r;
}

NodeRef Tape::tanh_(NodeRef x) {
  Tensor y = val(x.id);
  for (double& v : y.data) v = std::tanh(v);
  NodeRef r = push(std::move(y));
  int out = r.id, xi = x.id;
  nodes_[out].backward = [out, xi](Tape& t) {
    const Tensor& g = t.grads_[out];
    const Tensor& yv = t.val(out);
    Tensor& gx = t.grad_buf(xi);
    for (std::size_t i = 0; i < g.size(); ++i)
      gx.data[i] += g.data[i] * (1.0 - yv.data[i] * yv.data[i]);
  };
  return r;
}

NodeRef Tape::slice(NodeRef x, std::size_t offset, std::size_t len) {
  const Tensor& xv = val(x.id);
  if (xv.rank() != 1 || offset + len > xv.size())
    throw DimensionError("slice: [" + std::to_string(offset) + "," +
                         std::to_string(offset + len) + ") of " + xv.shape_str());
  Tensor y = Tensor::zeros({len});
  std::copy_n(xv.data.begin() + (long)offset, len, y.data.begin());
  NodeRef r = push(std::move(y));
  int out = r.id, xi = x.id;
  nodes_[out].backward = [out, xi, offset, len](Tape& t) {
    const Tensor& g = t.grads_[out];
    Tensor& gx = t.grad_buf(xi);
    for (std::size_t i = 0; i < len; ++i) gx.data[offset + i] += g.data[i];
  };
  return r;
}

NodeRef Tape::concat(NodeRef a, NodeRef b) {
  const Tensor& av = val(a.id);
  const Tensor& bv = val(b.id);
  if (av.rank() != 1 || bv.rank() != 1)
    throw DimensionError("concat: " + av.shape_str() + " " + bv.shape_str());
  Tensor y = Tensor::zeros({av.size() + bv.size()});
  std::copy(av.data.begin(), av.data.end(), y.data.begin());
  std::copy(bv.data.begin(), bv.data.end(), y.data.begin() + (long)av.size());
  std::size_t na = av.size(), nb = bv.size();  // before push: av/bv dangle after reallocation
  NodeRef r = push(std::move(y));
  int out = r.id, ai = a.id, bi = b.id;
  nodes_[out].backward = [out, ai, bi, na, nb](Tape& t) {
    const Tensor& g = t.grads_[out];
    Tensor& ga = t.grad_buf(ai);
    for (std::size_t i = 0; i < na; ++i) ga.data[i] += g.data[i];
    Tensor& gb = t.grad_buf(bi);
    for (std::size_t i = 0; i < nb; ++i) gb.data[i] += g.data[na + i];
  };
  return r;
}

NodeRef Tape::mean(NodeRef x) {
  const Tensor& xv = val(x.id);
  if (xv.size() == 0) throw DataError("mean: empty tensor");
  double s = 0.0;
  for (double v : xv.data) s += v;
  std::size_t n = xv.size();  // before push: push may reallocate nodes_ and invalidate xv
  NodeRef r = push(Tensor::scalar(s / (double)n));
  int out = r.id, xi = x.id;
  nodes_[out].backward = [out, xi, n](Tape& t) {
    double g = t.grads_[out].data[0] / (double)n;
    Tensor& gx = t.grad_buf(xi);
    for (std::size_t i = 0; i < n; ++i) gx.data[i] += g;
  };
  return r;
}

Tensor softmax(const Tensor& logits) {
  Tensor p = logits;
  double mx = *std::max_element(p.data.begin(), p.data.end());
  double z = 0.0;
  for (double& v : p.data) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : p.data) v /= z;
  return p;
}

Tape::SoftmaxResult Tape::softmax_xent(NodeRef logits, std::size_t gold) {
  const Tensor& lv = val(logits.id);
  if (lv.rank() != 1 || lv.size() < 2)
    throw DimensionError("softmax_xent: need a vector of width >= 2, got " + lv.shape_str());
  if (gold >= lv.size())
    throw DataError("softmax_xent: gold index " + std::to_string(gold) + " out of range [0," +
                    std::to_string(lv.size()) + ")");
  double mx = *std::max_element(lv.data.begin(), lv.data.end());
  double z = 0.0;
  for (double v : lv.data) z += std::exp(v - mx);
  double logz = std::log(z) + mx;
  double loss = logz - lv.data[gold];
  Tensor probs = Tensor::zeros({lv.size()});
  for (std::size_t i = 0; i < lv.size(); ++i) probs.data[i] = std::exp(lv.data[i] - logz);

  NodeRef r = push(Tensor::scalar(loss));
  int out = r.id, li = logits.id;
  Tensor probs_copy = probs;
  nodes_[out].backward = [out, li, gold, probs_copy](Tape& t) {
    double g = t.grads_[out].data[0];
    Tensor& gl = t.grad_buf(li);
    for (std::size_t i = 0; i < probs_copy.size(); ++i)
      gl.data[i] += g * (probs_copy.data[i] - (i == gold ? 1.0 : 0.0));
  };
  return SoftmaxResult{r, std::move(probs)};
}

void Tape::backward(NodeRef loss) {
  if (nodes_.empty() || !loss.valid() || (std::size_t)loss.id >= nodes_.size())
    throw StateError("backward: no forward pass on this tape");
  if (nodes_[loss.id].value.size() != 1)
    throw StateError("backward: loss node is not scalar");
  grads_.assign(nodes_.size(), Tensor{});
  grad_buf(loss.id).data[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    if (grads_[i].data.empty()) continue;  // not reachable from the loss
    if (nodes_[i].backward) nodes_[i].backward(*this);
  }
  backward_done_ = true;
}

void Tape::for_each_param_grad(
    const std::function<void(Parameter&, const Tensor&)>& fn) const {
  if (!backward_done_) throw StateError("for_each_param_grad: backward() has not run");
  for (int id : param_order_) {
    if ((std::size_t)id < grads_.size() && !grads_[id].data.empty())
      fn(*nodes_[id].param, grads_[id]);
  }
}

}  // namespace slotfill
