#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "slotfill/tape.hpp"
#include "slotfill/tensor.hpp"

namespace slotfill {

/// A named trainable tensor with its gradient slot.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad.fill(0.0); }
};

/// Owns all parameters of a model; names are unique paths like
/// "ct.lstm1.fwd.w_input". Iteration order is creation order, which fixes
/// the optimizer state layout and the checkpoint layout.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, std::vector<std::size_t> shape);
  Parameter* find(const std::string& name);
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  std::size_t total_values() const;
  void zero_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

using Rng = std::mt19937_64;

/// Uniform in [-s, s] with s = sqrt(6 / (fan_in + fan_out)).
void init_glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// One direction of an LSTM. Gate order within the stacked 4k rows is
/// (input, forget, candidate, output).
struct LstmCellParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Parameter* w_input = nullptr;   // [4k x d]
  Parameter* w_hidden = nullptr;  // [4k x k]
  Parameter* bias = nullptr;      // [4k]
};

/// Creates and initializes LSTM parameters under `prefix`. The forget-gate
/// bias starts at 1.0, everything else per init_glorot / zero.
LstmCellParams make_lstm_cell(ParameterStore& store, const std::string& prefix, std::size_t d,
                              std::size_t k, Rng& rng);

struct LstmState {
  NodeRef h;
  NodeRef c;
};

LstmState lstm_cell(Tape& tape, NodeRef x, LstmState prev, const LstmCellParams& p);

/// Bidirectional encoding: output[t] = [h_fwd(t) ; h_bwd(t)], dim 2k.
std::vector<NodeRef> bilstm(Tape& tape, const std::vector<NodeRef>& seq,
                            const LstmCellParams& fwd, const LstmCellParams& bwd);

struct RmsPropConfig {
  double learning_rate = 0.001;
  double decay = 0.9;
  double epsilon = 1e-8;
};

/// RMSProp: cache <- rho*cache + (1-rho)*g^2; theta -= lr*g/(sqrt(cache)+eps).
/// Gradients are zeroed after each step.
class RmsProp {
 public:
  explicit RmsProp(RmsPropConfig cfg) : cfg_(cfg) {}
  void step(ParameterStore& params);
  const RmsPropConfig& config() const { return cfg_; }

 private:
  RmsPropConfig cfg_;
  std::unordered_map<const Parameter*, Tensor> cache_;
};

/// Central-finite-difference check of every parameter coordinate against the
/// analytic gradient. `build` must construct the scalar loss on the given
/// tape, deterministically, using tape.param() for everything in `params`.
/// Returns max over coordinates of |a - n| / max(1e-8, |a| + |n|).
double grad_check(ParameterStore& params, const std::function<NodeRef(Tape&)>& build,
                  double step);

}  // namespace slotfill
