#pragma once

// Behavioral model of a training-capable PE and the accelerator's cycle
// model.
//
// The PE reuses its single multiplier for the four training products, with
// MUX1/MUX2 choosing the operands:
//   step 1  MUX1 = G_{i+1,k}, MUX2 = W_{i+1,k}   accumulated into R1 (N_{i+1} cycles)
//   step 2  MUX1 = f'_i,      MUX2 = R1          -> G_i
//   step 3  MUX1 = X_i,       MUX2 = G_i         -> dE/dW_i
//   step 4  MUX1 = -alpha,    MUX2 = dE/dW_i     -> delta W_i
// Timing counts multiplier cycles only; adds and mux switching are free.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fxtrain/netgraph.hpp"
#include "fxtrain/qnum.hpp"

namespace fxtrain::pesim {

using qnum::QFormat;
using qnum::QValue;

enum class TdmStep : int { accumulate = 1, derivative = 2, input = 3, learning_rate = 4 };
enum class Mux1 { g_next, fprime, input, alpha };
enum class Mux2 { w_next, r1, product };

struct TdmEvent {
  std::uint64_t cycle = 0;
  TdmStep step = TdmStep::accumulate;
  QValue lhs;  // MUX1 operand
  QValue rhs;  // MUX2 operand
  /// Exact product for step 1 (accumulated wide), the rounded register value otherwise.
  double product = 0;
};

using TdmTrace = std::vector<TdmEvent>;

struct PEState {
  Mux1 mux1_sel = Mux1::g_next;
  Mux2 mux2_sel = Mux2::w_next;
  qnum::WideAcc acc;  // partial sum for step 1
  // Scratchpad registers added for training.
  QValue r1;         // G_{i+1} x W_{i+1}
  QValue g;          // G_i
  QValue grad;       // dE/dW_i
  QValue delta;      // -alpha dE/dW_i
  QValue alpha_reg;  // -alpha, fixed for the whole update sequence
};

class ProcessingElement {
 public:
  ProcessingElement(QFormat fmt, const QValue& alpha);

  void accumulate(const QValue& g_next, const QValue& w_next);
  /// Rounds the accumulated partial sum once into R1.
  void latch_r1();
  void derivative(const QValue& fprime);
  void input(const QValue& x);
  void learning_rate();

  const PEState& state() const noexcept { return state_; }
  const TdmTrace& trace() const noexcept { return trace_; }
  std::uint64_t cycle() const noexcept { return cycle_; }

 private:
  QValue multiply(Mux1 m1, const QValue& a, Mux2 m2, const QValue& b, TdmStep step);

  QFormat fmt_;
  PEState state_;
  TdmTrace trace_;
  std::uint64_t cycle_ = 0;
};

struct TdmResult {
  QValue delta_w;
  TdmTrace trace;
};

/// One weight element's update sequence on a single PE. Throws length_mismatch
/// when g_next and w_next differ in length.
TdmResult tdm_weight_update(std::span<const QValue> g_next, std::span<const QValue> w_next, const QValue& fprime,
                            const QValue& x, const QValue& alpha, QFormat fmt);

// Closed-form cycle counts.

/// FC inference with N_cur PEs: N_prev + N_cur.
std::uint64_t cycles_fc_inference(std::uint64_t n_prev, std::uint64_t n_cur);
/// Conv inference, h x w x d input, k x k x d filter: k d (w-k)(h-k), as
/// written. Requires k < min(h, w).
std::uint64_t cycles_conv_inference(std::uint64_t h, std::uint64_t w, std::uint64_t d, std::uint64_t k);
/// Pipelined back-propagation over n layers: N_n + sum_i N_i.
std::uint64_t cycles_bp_pipelined(std::span<const std::uint64_t> layer_sizes);

// Cycle-stepped simulations used as oracles for the closed forms.

std::uint64_t simulate_fc_inference(std::uint64_t n_prev, std::uint64_t n_cur);
std::uint64_t simulate_conv_inference(std::uint64_t h, std::uint64_t w, std::uint64_t d, std::uint64_t k);

struct LayerCycles {
  std::string name;
  std::string kind;
  std::uint64_t closed_form = 0;
  std::uint64_t simulated = 0;
  std::string note;
};

struct CycleReport {
  std::vector<LayerCycles> inference;
  /// Back-propagation stages: the loss unit, then layers n..1.
  std::vector<LayerCycles> bp;
  std::vector<std::uint64_t> bp_layer_sizes;
  std::uint64_t bp_closed_form = 0;
  std::uint64_t bp_simulated = 0;
  /// Largest number of multiplies issued by one multiplier in one cycle.
  std::uint64_t max_multiplier_ops_per_cycle = 0;
  std::vector<std::string> notes;
};

/// Event-driven simulation of one back-propagation iteration. The loss unit
/// reads one logit per cycle and releases dE/dY_n when all N_n are in. Each
/// layer's global multiplier issues one G element per cycle once its operand
/// is ready; every G_{i+1} element is forwarded to the layer-i PEs, which
/// accumulate it (step 1) in the cycle it is produced, so R1 completes with
/// the last element. Throws invalid_argument for an empty vector.
CycleReport simulate_bp_schedule(std::span<const std::uint64_t> layer_sizes);

/// Inference rows for every layer plus the back-propagation schedule, with
/// conv layers contributing their output-activation count to the BP vector.
CycleReport timing_report(const net::NetworkConfig& config);

/// {layers:[{name, kind, closed_form, simulated, ...}], bp:{...}, bp_total,
///  bp_dense_tail:{...}, notes:[...]}
nlohmann::json to_json(const CycleReport& report, const net::NetworkConfig* config = nullptr);

}  // namespace fxtrain::pesim
