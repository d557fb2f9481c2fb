#include "fxtrain/pesim.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>

namespace fxtrain::pesim {

ProcessingElement::ProcessingElement(QFormat fmt, const QValue& alpha) : fmt_(fmt) {
  state_.alpha_reg = qnum::q_neg(qnum::requantize(alpha, fmt));
  state_.r1 = state_.g = state_.grad = state_.delta = QValue::zero(fmt);
}

QValue ProcessingElement::multiply(Mux1 m1, const QValue& a, Mux2 m2, const QValue& b, TdmStep step) {
  state_.mux1_sel = m1;
  state_.mux2_sel = m2;
  ++cycle_;
  const QValue out = qnum::q_mul(a, b, fmt_);
  trace_.push_back({cycle_, step, a, b, out.to_real()});
  return out;
}

void ProcessingElement::accumulate(const QValue& g_next, const QValue& w_next) {
  state_.mux1_sel = Mux1::g_next;
  state_.mux2_sel = Mux2::w_next;
  ++cycle_;
  state_.acc = qnum::mac(state_.acc, g_next, w_next);
  trace_.push_back({cycle_, TdmStep::accumulate, g_next, w_next, g_next.to_real() * w_next.to_real()});
}

void ProcessingElement::latch_r1() { state_.r1 = qnum::finalize(state_.acc, fmt_); }

void ProcessingElement::derivative(const QValue& fprime) {
  state_.g = multiply(Mux1::fprime, fprime, Mux2::r1, state_.r1, TdmStep::derivative);
}

void ProcessingElement::input(const QValue& x) {
  state_.grad = multiply(Mux1::input, x, Mux2::product, state_.g, TdmStep::input);
}

void ProcessingElement::learning_rate() {
  state_.delta = multiply(Mux1::alpha, state_.alpha_reg, Mux2::product, state_.grad, TdmStep::learning_rate);
}

TdmResult tdm_weight_update(std::span<const QValue> g_next, std::span<const QValue> w_next, const QValue& fprime,
                            const QValue& x, const QValue& alpha, QFormat fmt) {
  if (g_next.size() != w_next.size()) {
    throw Error(Errc::length_mismatch, "G_{i+1} has " + std::to_string(g_next.size()) + " elements, W_{i+1} has " +
                                           std::to_string(w_next.size()));
  }
  ProcessingElement pe(fmt, alpha);
  for (std::size_t k = 0; k < g_next.size(); ++k) pe.accumulate(g_next[k], w_next[k]);
  pe.latch_r1();
  pe.derivative(fprime);
  pe.input(x);
  pe.learning_rate();
  return {pe.state().delta, pe.trace()};
}

std::uint64_t cycles_fc_inference(std::uint64_t n_prev, std::uint64_t n_cur) {
  if (n_prev == 0 || n_cur == 0) throw Error(Errc::invalid_argument, "FC layer sizes must be at least 1");
  return n_prev + n_cur;
}

std::uint64_t cycles_conv_inference(std::uint64_t h, std::uint64_t w, std::uint64_t d, std::uint64_t k) {
  if (k == 0 || d == 0 || k >= h || k >= w) {
    throw Error(Errc::invalid_argument, "conv cycle model needs 1 <= k < min(h, w) and d >= 1");
  }
  return k * d * (w - k) * (h - k);
}

std::uint64_t cycles_bp_pipelined(std::span<const std::uint64_t> layer_sizes) {
  if (layer_sizes.empty()) throw Error(Errc::invalid_argument, "back-propagation needs at least one layer");
  return layer_sizes.back() + std::accumulate(layer_sizes.begin(), layer_sizes.end(), std::uint64_t{0});
}

std::uint64_t simulate_fc_inference(std::uint64_t n_prev, std::uint64_t n_cur) {
  if (n_prev == 0 || n_cur == 0) throw Error(Errc::invalid_argument, "FC layer sizes must be at least 1");
  // Systolic chain: one input enters PE 0 per cycle and each input register
  // hands its value to the next PE one cycle later. A PE does one MAC per
  // cycle and writes its neuron out the cycle after its last MAC.
  std::vector<std::int64_t> link(n_cur, -1);  // input index held by each PE this cycle
  std::vector<std::uint64_t> macs(n_cur, 0);
  std::uint64_t next_input = 0;
  std::uint64_t written = 0;
  std::uint64_t cycle = 0;
  while (written < n_cur) {
    ++cycle;
    for (std::uint64_t pe = 0; pe < n_cur; ++pe) {
      if (macs[pe] == n_prev) {
        macs[pe] = n_prev + 1;
        ++written;
      }
    }
    for (std::uint64_t pe = n_cur; pe-- > 1;) link[pe] = link[pe - 1];
    link[0] = next_input < n_prev ? static_cast<std::int64_t>(next_input++) : -1;
    for (std::uint64_t pe = 0; pe < n_cur; ++pe) {
      if (link[pe] >= 0 && macs[pe] < n_prev) ++macs[pe];
    }
  }
  return cycle;
}

std::uint64_t simulate_conv_inference(std::uint64_t h, std::uint64_t w, std::uint64_t d, std::uint64_t k) {
  if (k == 0 || d == 0 || k >= h || k >= w) {
    throw Error(Errc::invalid_argument, "conv cycle model needs 1 <= k < min(h, w) and d >= 1");
  }
  // Row-stationary lanes: lane r holds filter row r and, for every channel and
  // every one of the (h-k)(w-k) positions, streams k products, one per cycle.
  // Lanes run in lockstep and their row sums combine for free.
  struct Lane {
    std::uint64_t remaining;
  };
  const std::uint64_t work_per_lane = d * (h - k) * (w - k) * k;
  std::vector<Lane> lanes(k, Lane{work_per_lane});
  std::uint64_t cycle = 0;
  bool busy = true;
  while (busy) {
    busy = false;
    for (auto& lane : lanes) {
      if (lane.remaining > 0) {
        --lane.remaining;
        busy = true;
      }
    }
    if (busy) ++cycle;
  }
  return cycle;
}

CycleReport simulate_bp_schedule(std::span<const std::uint64_t> layer_sizes) {
  if (layer_sizes.empty()) throw Error(Errc::invalid_argument, "back-propagation needs at least one layer");
  const std::size_t n = layer_sizes.size();

  // Units: 0 = loss unit, 1..n = global multipliers of layers n..1.
  // ready[u][j] = cycle at whose end operand j of unit u is available.
  struct Unit {
    std::deque<std::uint64_t> pending;  // operand-ready cycle per queued op
    std::uint64_t first = 0;
    std::uint64_t last = 0;
    std::uint64_t issued = 0;
    std::uint64_t total = 0;
  };
  std::vector<Unit> units(n + 1);
  const std::uint64_t n_top = layer_sizes[n - 1];

  // The loss unit consumes one logit per cycle; logits are ready at cycle 0.
  units[0].total = n_top;
  for (std::uint64_t j = 0; j < n_top; ++j) units[0].pending.push_back(0);
  for (std::size_t u = 1; u <= n; ++u) units[u].total = layer_sizes[n - u];

  // Per cycle, multiplies issued by each multiplier (global and PE).
  std::map<std::pair<std::uint64_t, std::size_t>, std::uint64_t> usage;
  std::uint64_t max_usage = 0;
  auto use = [&](std::uint64_t cycle, std::size_t mult) {
    const auto count = ++usage[{cycle, mult}];
    max_usage = std::max(max_usage, count);
  };

  std::uint64_t cycle = 0;
  std::size_t done_units = 0;
  while (done_units < units.size()) {
    ++cycle;
    done_units = 0;
    for (std::size_t u = 0; u < units.size(); ++u) {
      auto& unit = units[u];
      if (unit.issued == unit.total) {
        ++done_units;
        continue;
      }
      if (unit.pending.empty() || unit.pending.front() >= cycle) continue;
      unit.pending.pop_front();
      if (unit.issued == 0) unit.first = cycle;
      ++unit.issued;
      unit.last = cycle;
      use(cycle, u * 2);  // the unit's own multiplier
      if (u == 0) {
        // Softmax needs every logit: dE/dY_n is released as one vector.
        if (unit.issued == unit.total) {
          for (std::uint64_t j = 0; j < units[1].total; ++j) units[1].pending.push_back(cycle);
        }
      } else if (u < n) {
        // Forward G_{i+1} to the PEs of the layer below; they accumulate it in
        // this same cycle, one step-1 multiply per PE.
        use(cycle, (u + 1) * 2 + 1);
        if (unit.issued == unit.total) {
          for (std::uint64_t j = 0; j < units[u + 1].total; ++j) units[u + 1].pending.push_back(cycle);
        }
      }
      if (unit.issued == unit.total) ++done_units;
    }
  }

  CycleReport report;
  report.bp_layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  report.bp_closed_form = cycles_bp_pipelined(layer_sizes);
  report.bp_simulated = 0;
  for (const auto& unit : units) report.bp_simulated = std::max(report.bp_simulated, unit.last);
  report.max_multiplier_ops_per_cycle = max_usage;
  report.bp.push_back({"loss", "loss", n_top, units[0].last - units[0].first + 1, ""});
  for (std::size_t u = 1; u <= n; ++u) {
    const std::size_t layer = n - u;
    report.bp.push_back({"L" + std::to_string(layer + 1), "G", layer_sizes[layer],
                         units[u].last - units[u].first + 1, ""});
  }
  return report;
}

CycleReport timing_report(const net::NetworkConfig& config) {
  const auto shapes = net::validate(config);
  std::vector<LayerCycles> rows;
  std::vector<std::uint64_t> bp_sizes;
  bool conv_note = false;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const auto& layer = config.layers[i];
    const auto& shape = shapes.layers[i];
    LayerCycles row;
    row.name = shape.name;
    row.kind = std::string(net::layer_kind(layer));
    if (const auto* c = std::get_if<net::ConvSpec>(&layer)) {
      row.closed_form = cycles_conv_inference(c->in_h, c->in_w, c->in_d, c->kernel);
      row.simulated = simulate_conv_inference(c->in_h, c->in_w, c->in_d, c->kernel);
      row.note = "per filter pass; " + std::to_string(c->filters) + " filters";
      bp_sizes.push_back(shape.out.size());
      conv_note = true;
    } else if (const auto* d = std::get_if<net::DenseSpec>(&layer)) {
      row.closed_form = cycles_fc_inference(d->in_n, d->out_n);
      row.simulated = simulate_fc_inference(d->in_n, d->out_n);
      bp_sizes.push_back(static_cast<std::uint64_t>(d->out_n));
    } else {
      row.note = "pooling is not part of the cycle model";
    }
    rows.push_back(row);
  }
  CycleReport report = simulate_bp_schedule(bp_sizes);
  report.inference = std::move(rows);
  if (conv_note) {
    report.notes.push_back(
        "conv cycles use k*d*(w-k)*(h-k) verbatim; the functional engine computes all (h-k+1)*(w-k+1) "
        "output positions");
    report.notes.push_back("conv layers enter the back-propagation schedule with their output-activation count");
  }
  return report;
}

nlohmann::json to_json(const CycleReport& report, const net::NetworkConfig* config) {
  using nlohmann::json;
  json layers = json::array();
  for (const auto& r : report.inference) {
    json row{{"name", r.name}, {"kind", r.kind}, {"closed_form", r.closed_form}, {"simulated", r.simulated}};
    if (!r.note.empty()) row["note"] = r.note;
    layers.push_back(std::move(row));
  }
  json stages = json::array();
  for (const auto& r : report.bp) {
    stages.push_back({{"stage", r.name}, {"closed_form", r.closed_form}, {"simulated", r.simulated}});
  }
  json doc;
  doc["layers"] = std::move(layers);
  doc["bp"] = {{"layer_sizes", report.bp_layer_sizes},
               {"closed_form", report.bp_closed_form},
               {"simulated", report.bp_simulated},
               {"stages", std::move(stages)},
               {"max_multiplier_ops_per_cycle", report.max_multiplier_ops_per_cycle}};
  doc["bp_total"] = report.bp_closed_form;

  if (config != nullptr) {
    std::vector<std::uint64_t> tail;
    for (const auto& l : config->layers) {
      if (const auto* d = std::get_if<net::DenseSpec>(&l)) tail.push_back(static_cast<std::uint64_t>(d->out_n));
    }
    if (!tail.empty()) {
      const auto sim = simulate_bp_schedule(tail);
      doc["bp_dense_tail"] = {
          {"layer_sizes", tail}, {"closed_form", sim.bp_closed_form}, {"simulated", sim.bp_simulated}};
    }
  }
  doc["notes"] = report.notes;
  return doc;
}

}  // namespace fxtrain::pesim
