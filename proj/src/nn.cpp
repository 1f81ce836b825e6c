#include "slotfill/nn.hpp"

#include <cmath>

namespace slotfill {

Parameter& ParameterStore::create(const std::string& name, std::vector<std::size_t> shape) {
  if (index_.count(name)) throw StateError("parameter already exists: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor::zeros(shape);
  p->grad = Tensor::zeros(std::move(shape));
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& p : params_) p->zero_grad();
}

void init_glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  double s = std::sqrt(6.0 / (double)(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-s, s);
  for (double& v : t.data) v = dist(rng);
}

LstmCellParams make_lstm_cell(ParameterStore& store, const std::string& prefix, std::size_t d,
                              std::size_t k, Rng& rng) {
  LstmCellParams p;
  p.input_dim = d;
  p.hidden_dim = k;
  p.w_input = &store.create(prefix + ".w_input", {4 * k, d});
  p.w_hidden = &store.create(prefix + ".w_hidden", {4 * k, k});
  p.bias = &store.create(prefix + ".bias", {4 * k});
  init_glorot(p.w_input->value, d, k, rng);
  init_glorot(p.w_hidden->value, k, k, rng);
  // forget gate bias 1.0, rows [k, 2k)
  for (std::size_t i = k; i < 2 * k; ++i) p.bias->value.data[i] = 1.0;
  return p;
}

LstmState lstm_cell(Tape& tape, NodeRef x, LstmState prev, const LstmCellParams& p) {
  std::size_t k = p.hidden_dim;
  if (tape.value(x).size() != p.input_dim)
    throw DimensionError("lstm_cell: input " + tape.value(x).shape_str() + " expected [" +
                         std::to_string(p.input_dim) + "]");
  NodeRef gates = tape.add(
      tape.add(tape.matvec(tape.param(*p.w_input), x),
               tape.matvec(tape.param(*p.w_hidden), prev.h)),
      tape.param(*p.bias));
  NodeRef gi = tape.sigmoid(tape.slice(gates, 0, k));
  NodeRef gf = tape.sigmoid(tape.slice(gates, k, k));
  NodeRef gg = tape.tanh_(tape.slice(gates, 2 * k, k));
  NodeRef go = tape.sigmoid(tape.slice(gates, 3 * k, k));
  NodeRef c = tape.add(tape.mul(gf, prev.c), tape.mul(gi, gg));
  NodeRef h = tape.mul(go, tape.tanh_(c));
  return LstmState{h, c};
}

std::vector<NodeRef> bilstm(Tape& tape, const std::vector<NodeRef>& seq,
                            const LstmCellParams& fwd, const LstmCellParams& bwd) {
  if (seq.empty()) throw DataError("bilstm: empty input sequence");
  std::size_t n = seq.size();
  std::size_t k = fwd.hidden_dim;

  LstmState st{tape.constant(Tensor::zeros({k})), tape.constant(Tensor::zeros({k}))};
  std::vector<NodeRef> hs_fwd(n);
  for (std::size_t t = 0; t < n; ++t) {
    st = lstm_cell(tape, seq[t], st, fwd);
    hs_fwd[t] = st.h;
  }

  std::size_t kb = bwd.hidden_dim;
  st = LstmState{tape.constant(Tensor::zeros({kb})), tape.constant(Tensor::zeros({kb}))};
  std::vector<NodeRef> hs_bwd(n);
  for (std::size_t t = n; t-- > 0;) {
    st = lstm_cell(tape, seq[t], st, bwd);
    hs_bwd[t] = st.h;
  }

  std::vector<NodeRef> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = tape.concat(hs_fwd[t], hs_bwd[t]);
  return out;
}

void RmsProp::step(ParameterStore& params) {
  for (auto& up : params.all()) {
    Parameter& p = *up;
    Tensor& cache = cache_[&p];
    if (cache.data.empty()) cache = Tensor::zeros(p.value.shape);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      double g = p.grad.data[i];
      double c = cfg_.decay * cache.data[i] + (1.0 - cfg_.decay) * g * g;
      cache.data[i] = c;
      p.value.data[i] -= cfg_.learning_rate * g / (std::sqrt(c) + cfg_.epsilon);
    }
    p.zero_grad();
  }
}

double grad_check(ParameterStore& params, const std::function<NodeRef(Tape&)>& build,
                  double step) {
  if (step <= 0.0) throw DataError("grad_check: step must be positive");

  params.zero_grads();
  {
    Tape tape;
    NodeRef loss = build(tape);
    tape.backward(loss);
    tape.for_each_param_grad(
        [](Parameter& p, const Tensor& g) {
          for (std::size_t i = 0; i < g.size(); ++i) p.grad.data[i] += g.data[i];
        });
  }

  auto eval = [&]() {
    Tape tape;
    NodeRef loss = build(tape);
    double v = tape.value(loss).data[0];
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
    return v;
  };

  double max_rel = 0.0;
  for (auto& up : params.all()) {
    Parameter& p = *up;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      double saved = p.value.data[i];
      p.value.data[i] = saved + step;
      double up_v = eval();
      p.value.data[i] = saved - step;
      double dn_v = eval();
      p.value.data[i] = saved;
      double numeric = (up_v - dn_v) / (2.0 * step);
      double analytic = p.grad.data[i];
      if (!std::isfinite(numeric) || !std::isfinite(analytic))
        throw NumericError("grad_check: non-finite gradient at " + p.name);
      double rel = std::abs(analytic - numeric) /
                   std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      if (rel > max_rel) max_rel = rel;
    }
  }
  params.zero_grads();
  return max_rel;
}

}  // namespace slotfill
