// SPDX-License-Identifier: Apache-2.0
//
// satmimo - multi-satellite MU-MIMO downlink precoding simulator
// Copyright (C) 2026 The satmimo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "satmimo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "satmimo/channel.hpp"
#include "satmimo/config.hpp"
#include "satmimo/impairments.hpp"
#include "satmimo/waveform.hpp"

namespace satmimo {

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::siso: return "siso";
    case Mode::mimo: return "mimo";
    case Mode::uncoordinated: return "uncoordinated";
  }
  return "unknown";
}

Mode parse_mode(const std::string& s) {
  if (s == "siso") return Mode::siso;
  if (s == "mimo" || s == "mimo-precoded") return Mode::mimo;
  if (s == "uncoordinated" || s == "uncoordinated-ffr") return Mode::uncoordinated;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

std::string event_name(EventType t) {
  switch (t) {
    case EventType::pll_block: return "pll_block";
    case EventType::pilot_slot: return "pilot_slot";
    case EventType::csi_delivery: return "csi_delivery";
    case EventType::precoder_update: return "precoder_update";
    case EventType::metric_window: return "metric_window";
  }
  return "unknown";
}

bool EventQueue::Later::operator()(const Event& a, const Event& b) const {
  if (a.time != b.time) return a.time > b.time;
  if (a.type != b.type) return static_cast<int>(a.type) > static_cast<int>(b.type);
  return a.seq > b.seq;
}

void EventQueue::push(SimTime time, EventType type, std::size_t payload) {
  if (time < now_) throw std::logic_error("event scheduled into the past: " + event_name(type));
  heap_.push(Event{time, type, next_seq_++, payload});
}

Event EventQueue::pop() {
  if (heap_.empty()) throw std::logic_error("pop from empty event queue");
  Event e = heap_.top();
  heap_.pop();
  if (e.time < now_) throw std::logic_error("event queue time went backwards");
  now_ = e.time;
  return e;
}

std::vector<ScheduledEvent> schedule_delays(EventType type, double t, double propagation_s,
                                            double rtt_s, double feedback_latency_s) {
  if (propagation_s < 0.0 || rtt_s < 0.0 || feedback_latency_s < 0.0)
    throw std::invalid_argument("schedule_delays: delays must be >= 0");
  std::vector<ScheduledEvent> out;
  switch (type) {
    case EventType::pll_block:
      out.push_back({t + rtt_s, EventType::metric_window, t});
      break;
    case EventType::pilot_slot: {
      const double delivery = t + propagation_s + feedback_latency_s;
      out.push_back({delivery, EventType::csi_delivery, t});
      out.push_back({delivery + propagation_s, EventType::precoder_update, t});
      break;
    }
    case EventType::csi_delivery:
      out.push_back({t + propagation_s, EventType::precoder_update, t});
      break;
    default:
      break;
  }
  return out;
}

LinkBudget make_link_budget(const CMatrix& h_geo, const std::vector<double>& cnr_db,
                            std::size_t active_satellite) {
  if (static_cast<std::size_t>(h_geo.rows()) != cnr_db.size())
    throw std::invalid_argument("one CNR per user terminal required");
  if (active_satellite >= static_cast<std::size_t>(h_geo.cols()))
    throw std::out_of_range("active satellite out of range");
  LinkBudget lb;
  lb.cnr_db = cnr_db;
  const auto a = static_cast<Eigen::Index>(active_satellite);
  lb.path_scale = 1.0 / std::abs(h_geo(0, a));
  lb.channel = h_geo * lb.path_scale;
  for (Eigen::Index k = 0; k < h_geo.rows(); ++k) {
    const double cnr = cnr_db[static_cast<std::size_t>(k)];
    if (!std::isfinite(cnr)) throw std::invalid_argument("CNR must be finite");
    lb.noise_variance.push_back(std::norm(lb.channel(k, a)) / db_to_linear(cnr));
  }
  return lb;
}

namespace {

// Fixed-capacity history of one per-sample phase series.
class PhaseRing {
 public:
  void init(std::size_t capacity) {
    data_.assign(capacity, 0.0);
    written_ = 0;
  }
  void push(double v) {
    data_[static_cast<std::size_t>(written_ % static_cast<std::int64_t>(data_.size()))] = v;
    ++written_;
  }
  double at(std::int64_t i) const {
    const auto cap = static_cast<std::int64_t>(data_.size());
    if (i < 0 || i >= written_ || i < written_ - cap)
      throw std::logic_error("causality violated: sample " + std::to_string(i) +
                             " not available (written " + std::to_string(written_) + ")");
    return data_[static_cast<std::size_t>(i % cap)];
  }
  std::int64_t written() const { return written_; }

 private:
  std::vector<double> data_;
  std::int64_t written_ = 0;
};

struct UtAccumulator {
  double inv_mer_sum = 0.0;
  std::size_t windows = 0;
  std::map<int, std::size_t> decoded;
  double leakage_lin_sum = 0.0;
};

class ClosedLoop {
 public:
  ClosedLoop(const Scenario& sc, Mode mode, const RunOptions& opt);
  MetricsReport execute();

 private:
  void process_block(std::int64_t block);
  void on_pilot_slot(std::size_t slot, double t_end);
  void on_csi_delivery(std::size_t group, double t);
  void on_precoder_update(std::size_t group, double t);
  void on_metric_window(std::size_t index, double t_end);
  double data_residual(std::size_t n, double u) const;
  std::int64_t sample_index(double u) const;
  void check_lock(double t);
  void finish();

  Scenario sc_;
  Mode mode_;
  RunOptions opt_;
  MetricsReport rep_;
  std::size_t n_sat_ = 0, n_ut_ = 0;
  std::vector<const GroundStation*> uts_;

  double fs_ = 0.0;
  std::int64_t block_samples_ = 0, tau_samples_ = 0, warm_samples_ = 0, total_samples_ = 0;
  std::int64_t log_every_samples_ = 0;
  double t_end_ = 0.0;

  LinkBudget budget_;
  ImpairmentState imp_;
  std::vector<Adpll> plls_;
  std::vector<double> tone_hz_;
  double tone_sigma_ = 0.0;
  std::vector<std::mt19937_64> tone_rng_;
  std::vector<PhaseRing> est_, clean_;
  std::vector<bool> was_locked_;
  ResidualPhaseAccumulator residual_;

  PilotBook pilots_;
  std::vector<double> pilot_starts_;
  std::vector<std::vector<CsiSnapshot>> pending_;  // [ut] within current group
  std::vector<std::vector<CsiSnapshot>> delivered_;  // [group] one per ut
  CsiHold hold_;

  PrecodingMatrix precoder_;
  bool zf_active_ = false;
  bool gain_set_ = false;
  std::vector<double> predicted_gain_;

  std::mt19937_64 data_rng_;
  std::vector<std::mt19937_64> noise_rng_, pilot_rng_;
  std::vector<UtAccumulator> acc_;
  std::vector<int> intended_;
  std::vector<double> window_starts_;
  EventQueue queue_;
};

ClosedLoop::ClosedLoop(const Scenario& sc, Mode mode, const RunOptions& opt)
    : sc_(sc), mode_(mode), opt_(opt) {
  if (opt.duration_s) sc_.duration_s = *opt.duration_s;
  if (opt.seed) sc_.seed = *opt.seed;
  auto errs = validate_for_mode(sc_, mode_);
  if (!errs.empty()) throw ScenarioError(errs);

  n_sat_ = sc_.num_satellites();
  uts_ = sc_.user_terminals();
  n_ut_ = uts_.size();
  const auto& sy = sc_.sync;
  fs_ = sy.sample_rate_hz;
  block_samples_ = std::llround(sy.block_s * fs_);
  tau_samples_ = std::llround(sy.rtt_s * fs_);
  warm_samples_ = std::llround(sy.warmup_s * fs_);
  t_end_ = sy.warmup_s + sc_.duration_s;
  total_samples_ = std::llround(t_end_ * fs_);
  total_samples_ = (total_samples_ + block_samples_ - 1) / block_samples_ * block_samples_;
  log_every_samples_ = std::max<std::int64_t>(block_samples_, std::llround(0.1 * fs_));

  rep_.scenario_name = sc_.name;
  rep_.config_hash = config_hash(sc_);
  rep_.seed = sc_.seed;
  rep_.mode = mode_;
  rep_.duration_s = sc_.duration_s;

  const double epoch = sc_.engine.start_epoch_s;
  std::vector<double> cnr;
  for (const auto* u : uts_) cnr.push_back(u->cnr_db);
  budget_ = make_link_budget(build_channel_matrix(sc_, epoch).entries, cnr, sc_.engine.active_satellite);

  std::vector<OscillatorProcess::ExternalOffset> doppler;
  for (std::size_t n = 0; n < n_sat_; ++n)
    doppler.emplace_back([this, n, epoch](double t) { return loop_doppler(sc_, n, epoch + t); });
  imp_ = make_impairment_state(sc_.impairments.converters, sc_.impairments.lnbs,
                               sc_.impairments.gateway, sc_.seed, std::move(doppler));

  tone_hz_ = sc_.carriers.reference_tone_hz;
  const double snr = sc_.impairments.tone_snr_db;
  tone_sigma_ = std::isfinite(snr) ? std::sqrt(0.5 / db_to_linear(snr)) : 0.0;
  for (std::size_t n = 0; n < n_sat_; ++n) {
    AdpllConfig cfg;
    cfg.loop_bandwidth_hz = sy.loop_bandwidth_hz;
    cfg.damping = sy.damping;
    cfg.sample_rate_hz = fs_;
    cfg.fll_time_constant_s = sy.fll_time_constant_s;
    const double off = n < sy.nco_initial_offset_hz.size() ? sy.nco_initial_offset_hz[n] : 0.0;
    cfg.nco_initial_freq_hz = -(tone_hz_[n] + off);
    plls_.emplace_back(cfg);
    tone_rng_.emplace_back(mix_seed(sc_.seed, 400 + n));
  }
  const std::int64_t window_samples =
      std::llround(std::max(sc_.engine.metric_window_s,
                            static_cast<double>(sc_.csi.pilot_length) / sc_.csi.pilot_rate_hz) * fs_);
  const auto cap = static_cast<std::size_t>(tau_samples_ + window_samples + 4 * block_samples_ + 16);
  est_.resize(n_sat_);
  clean_.resize(n_sat_);
  for (std::size_t n = 0; n < n_sat_; ++n) {
    est_[n].init(cap);
    clean_[n].init(cap);
  }
  was_locked_.assign(n_sat_, false);

  pilots_ = make_pilot_book(n_sat_, sc_.csi.pilot_length, sc_.csi.pilot_rate_hz);
  pending_.resize(n_ut_);

  data_rng_.seed(mix_seed(sc_.seed, 500));
  for (std::size_t k = 0; k < n_ut_; ++k) {
    noise_rng_.emplace_back(mix_seed(sc_.seed, 600 + k));
    pilot_rng_.emplace_back(mix_seed(sc_.seed, 700 + k));
  }
  acc_.resize(n_ut_);
  predicted_gain_.assign(n_ut_, 0.0);

  const auto& en = sc_.engine;
  switch (mode_) {
    case Mode::siso:
      precoder_ = siso_baseline(n_sat_, n_ut_, en.active_satellite, en.served_stream);
      intended_.assign(n_ut_, static_cast<int>(en.served_stream));
      break;
    case Mode::mimo:
      precoder_ = siso_baseline(n_sat_, n_ut_, en.active_satellite, en.served_stream);
      for (std::size_t k = 0; k < n_ut_; ++k) intended_.push_back(static_cast<int>(k));
      break;
    case Mode::uncoordinated:
      precoder_ = passthrough(n_sat_, n_ut_);
      for (std::size_t k = 0; k < n_ut_; ++k) intended_.push_back(static_cast<int>(k));
      break;
  }
  rep_.precoders.push_back({0.0, precoder_, "initial"});

  // Pilot slots: equally spaced within each update period, after warm-up.
  const auto& cs = sc_.csi;
  const double slot_len = static_cast<double>(cs.pilot_length) / cs.pilot_rate_hz;
  const double spacing = cs.update_period_s / static_cast<double>(cs.measurements_per_update);
  if (opt_.replay.empty()) {
    for (std::size_t s = 0;; ++s) {
      const double start = sy.warmup_s + static_cast<double>(s) * spacing;
      if (start + slot_len > t_end_ + 1e-9) break;
      pilot_starts_.push_back(start);
    }
  }
  // Metric windows sit between pilot slots.
  const double w = en.metric_window_s;
  for (std::size_t j = 0;; ++j) {
    const double start = sy.warmup_s + 0.5 * en.metric_interval_s + static_cast<double>(j) * en.metric_interval_s;
    if (start + w > t_end_ + 1e-9) break;
    bool overlap = false;
    for (double p : pilot_starts_) overlap |= start < p + slot_len && p < start + w;
    if (overlap) throw std::logic_error("metric window overlaps a pilot slot");
    window_starts_.push_back(start);
  }
}

std::int64_t ClosedLoop::sample_index(double u) const {
  return static_cast<std::int64_t>(std::floor(u * fs_ + 1e-9));
}

double ClosedLoop::data_residual(std::size_t n, double u) const {
  const std::int64_t i = sample_index(u);
  return wrap_phase(clean_[n].at(i) - est_[n].at(i - tau_samples_));
}

void ClosedLoop::process_block(std::int64_t block) {
  const std::int64_t i0 = block * block_samples_;
  const std::int64_t i1 = i0 + block_samples_;
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> delta(n_sat_, 0.0);
  for (std::int64_t i = i0; i < i1; ++i) {
    const double t = static_cast<double>(i) / fs_;
    const double gw = imp_.gateway.phase_at(t);
    for (std::size_t n = 0; n < n_sat_; ++n) {
      const double chain = wrap_phase(imp_.converters[n].phase_at(t) + gw);
      const double cyc = std::fmod(tone_hz_[n] * static_cast<double>(i), fs_) / fs_;
      const double tone = kTwoPi * cyc;
      double noise = 0.0;
      if (tone_sigma_ > 0.0) {
        const double a = nd(tone_rng_[n]) * tone_sigma_;
        const double b = nd(tone_rng_[n]) * tone_sigma_;
        noise = std::atan2(b, 1.0 + a);
      }
      const double received = wrap_phase(-tone - chain + noise);
      const double nco = plls_[n].state().nco_phase;
      plls_[n].step_phase(received);
      est_[n].push(wrap_phase(-nco - tone));
      clean_[n].push(chain);
      if (i >= tau_samples_) delta[n] = wrap_phase(chain - noise - est_[n].at(i - tau_samples_));
    }
    if (n_sat_ >= 2 && i >= warm_samples_ && i >= tau_samples_ &&
        (i - warm_samples_) % static_cast<std::int64_t>(sc_.sync.residual_decimation) == 0 &&
        t < t_end_)
      residual_.add(t, wrap_phase(delta[0] - delta[1]));
  }

  const double t_block_end = static_cast<double>(i1) / fs_;
  for (std::size_t n = 0; n < n_sat_; ++n) {
    const bool l = plls_[n].state().locked;
    if (l != was_locked_[n]) {
      rep_.lock_timeline.push_back({t_block_end, n, l});
      was_locked_[n] = l;
    }
  }
  if (i1 % log_every_samples_ == 0) {
    PllSample ps;
    ImpairmentSample is;
    ps.t = is.t = t_block_end;
    for (std::size_t n = 0; n < n_sat_; ++n) {
      ps.estimated_offset_hz.push_back(-plls_[n].frequency_hz() - tone_hz_[n]);
      const double total = imp_.converters[n].instantaneous_offset(t_block_end);
      const double dop = imp_.converters[n].external_offset(t_block_end);
      ps.true_offset_hz.push_back(total);
      ps.locked.push_back(plls_[n].state().locked);
      is.converter_hz.push_back(total - dop);
      is.doppler_hz.push_back(dop);
    }
    for (std::size_t k = 0; k < n_ut_ && k < imp_.lnbs.size(); ++k)
      is.lnb_hz.push_back(imp_.lnbs[k].instantaneous_offset(t_block_end));
    rep_.pll_series.push_back(std::move(ps));
    rep_.impairment_series.push_back(std::move(is));
  }
  if (i1 == warm_samples_) check_lock(t_block_end);
  const double keep = t_block_end - 2.0 * (sc_.sync.rtt_s + 0.1);
  if (keep > 0.0) {
    for (auto& c : imp_.converters) c.discard_before(keep);
    imp_.gateway.discard_before(keep);
  }
}

void ClosedLoop::check_lock(double t) {
  std::ostringstream msg;
  bool ok = true;
  for (std::size_t n = 0; n < n_sat_; ++n) {
    if (!plls_[n].state().locked) {
      ok = false;
      const double est = -plls_[n].frequency_hz() - tone_hz_[n];
      msg << "PLL " << n << " (" << sc_.satellites[n].id << ") not locked at t=" << t
          << " s; estimated chain offset " << est << " Hz, true "
          << imp_.converters[n].instantaneous_offset(t) << " Hz; ";
    }
  }
  if (!ok) throw SimulationAborted(msg.str());
}

void ClosedLoop::on_pilot_slot(std::size_t slot, double t_end) {
  const auto& cs = sc_.csi;
  const std::size_t len = cs.pilot_length;
  const double t0 = pilot_starts_[slot];
  const double offset = db_to_linear(-cs.pilot_snr_offset_db);
  std::vector<std::vector<Complex>> rot(n_sat_, std::vector<Complex>(len));
  for (std::size_t n = 0; n < n_sat_; ++n)
    for (std::size_t m = 0; m < len; ++m)
      rot[n][m] = unit_phasor(-data_residual(n, t0 + static_cast<double>(m) / cs.pilot_rate_hz));
  for (std::size_t k = 0; k < n_ut_; ++k) {
    std::vector<Complex> r(len, Complex{0.0, 0.0});
    for (std::size_t n = 0; n < n_sat_; ++n) {
      const Complex h = budget_.channel(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
      for (std::size_t m = 0; m < len; ++m) r[m] += h * rot[n][m] * pilots_.sequences[n][m];
    }
    const double sigma2 = budget_.noise_variance[k] * offset;
    add_complex_noise(r, sigma2, pilot_rng_[k]);
    const auto est = blue_estimate(r, pilots_, sigma2);
    CsiSnapshot snap;
    snap.h_est.entries = est.h.transpose();
    snap.h_est.carrier_hz = sc_.carriers.downlink_hz;
    snap.h_est.timestamp_s = t_end;
    snap.h_est.source = ChannelSource::estimated;
    snap.measurement_times = {t_end};
    snap.ut_id = uts_[k]->id;
    pending_[k].push_back(std::move(snap));
  }
  if (pending_[0].size() == cs.measurements_per_update) {
    std::vector<CsiSnapshot> group;
    for (std::size_t k = 0; k < n_ut_; ++k) {
      group.push_back(average_snapshots(pending_[k]));
      pending_[k].clear();
    }
    for (const auto& g : group) rep_.csi_snapshots.push_back(g);
    delivered_.push_back(std::move(group));
    const auto follow = schedule_delays(EventType::pilot_slot, t_end, sc_.engine.propagation_s,
                                        sc_.sync.rtt_s, cs.feedback_latency_s);
    queue_.push(to_ns(follow.front().time_s), EventType::csi_delivery, delivered_.size() - 1);
  }
}

void ClosedLoop::on_csi_delivery(std::size_t group, double t) {
  if (opt_.replay.empty()) {
    for (const auto& s : delivered_.at(group)) hold_.deliver({t, s});
  } else {
    hold_.deliver(opt_.replay.at(group));
  }
  rep_.csi_delivery_times.push_back(t);
  if (mode_ != Mode::mimo) return;
  const auto follow = schedule_delays(EventType::csi_delivery, t, sc_.engine.propagation_s, sc_.sync.rtt_s);
  queue_.push(to_ns(follow.front().time_s), EventType::precoder_update, group);
}

void ClosedLoop::on_precoder_update(std::size_t group, double t) {
  (void)group;
  CMatrix h_hat;
  if (sc_.csi.perfect) {
    h_hat = budget_.channel;
    const double u = std::min(t, static_cast<double>(est_[0].written() - 1) / fs_);
    for (std::size_t n = 0; n < n_sat_; ++n)
      h_hat.col(static_cast<Eigen::Index>(n)) *= unit_phasor(-data_residual(n, u));
  } else {
    auto held = hold_.at(t);
    std::vector<CsiSnapshot> ordered;
    for (const auto* u : uts_) {
      auto it = std::find_if(held.begin(), held.end(), [&](const CsiSnapshot& s) { return s.ut_id == u->id; });
      if (it == held.end()) return;  // incomplete feedback; keep the current precoder
      ordered.push_back(*it);
    }
    h_hat = assemble_channel(ordered).entries;
  }
  try {
    precoder_ = zf_precoder(h_hat);
    zf_active_ = true;
    rep_.precoders.push_back({t, precoder_, "zf"});
    if (!gain_set_) {
      for (std::size_t k = 0; k < n_ut_; ++k)
        predicted_gain_[k] = predicted_gain_db(budget_.channel, precoder_, k, sc_.engine.active_satellite);
      gain_set_ = true;
    }
  } catch (const RankDeficientError& e) {
    precoder_ = siso_baseline(n_sat_, n_ut_, sc_.engine.active_satellite, sc_.engine.served_stream);
    zf_active_ = false;
    rep_.precoders.push_back({t, precoder_, std::string("siso fallback: ") + e.what()});
  }
}

void ClosedLoop::on_metric_window(std::size_t index, double t_end) {
  const auto& en = sc_.engine;
  const double t0 = window_starts_[index];
  const auto m = static_cast<std::size_t>(std::llround(en.metric_window_s * sc_.carriers.symbol_rate));
  const double rs = sc_.carriers.symbol_rate;

  std::vector<std::vector<Complex>> d(n_ut_);
  for (std::size_t k = 0; k < n_ut_; ++k)
    d[k] = (en.symbol_model == SymbolModel::qpsk ? random_qpsk(m, data_rng_) : gaussian_symbols(m, data_rng_)).symbols;

  const CMatrix& P = precoder_.entries;
  const CMatrix& H = budget_.channel;
  std::vector<std::vector<Complex>> y(n_ut_, std::vector<Complex>(m));
  CVector dm(static_cast<Eigen::Index>(n_ut_));
  std::vector<Complex> rot(n_sat_);
  for (std::size_t i = 0; i < m; ++i) {
    const double u = t0 + static_cast<double>(i) / rs;
    for (std::size_t k = 0; k < n_ut_; ++k) dm(static_cast<Eigen::Index>(k)) = d[k][i];
    const CVector x = P * dm;
    for (std::size_t n = 0; n < n_sat_; ++n) rot[n] = unit_phasor(-data_residual(n, u));
    for (std::size_t k = 0; k < n_ut_; ++k) {
      Complex acc{0.0, 0.0};
      for (std::size_t n = 0; n < n_sat_; ++n)
        acc += H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)) * rot[n] * x(static_cast<Eigen::Index>(n));
      y[k][i] = acc;
    }
  }
  WindowRecord rec;
  rec.t = t_end;
  rec.zf_active = zf_active_;
  rec.counted = mode_ != Mode::mimo || zf_active_;

  // Analytic leakage at the window centre.
  CMatrix rho = CMatrix::Zero(static_cast<Eigen::Index>(n_sat_), static_cast<Eigen::Index>(n_sat_));
  for (std::size_t n = 0; n < n_sat_; ++n)
    rho(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) =
        unit_phasor(-data_residual(n, t0 + 0.5 * en.metric_window_s));
  const CMatrix M = H * rho * P;

  for (std::size_t k = 0; k < n_ut_; ++k) {
    add_complex_noise(y[k], budget_.noise_variance[k], noise_rng_[k]);
    // LNB rotation, then the terminal's own carrier recovery takes it out.
    if (k < imp_.lnbs.size()) {
      for (std::size_t i = 0; i < m; ++i) {
        const double ph = imp_.lnbs[k].phase_at(t0 + static_cast<double>(i) / rs);
        y[k][i] *= unit_phasor(-ph);
        y[k][i] *= unit_phasor(ph);
      }
      imp_.lnbs[k].discard_before(std::max(0.0, t0 - 1.0));
    }
    std::vector<double> mers;
    int best = -1;
    double best_mer = -std::numeric_limits<double>::infinity();
    MerMeasurement own;
    for (std::size_t j = 0; j < n_ut_; ++j) {
      const auto mm = measure_mer(y[k], d[j]);
      mers.push_back(mm.mer_db);
      if (static_cast<int>(j) == intended_[k]) own = mm;
      if (mm.mer_db > best_mer) {
        best_mer = mm.mer_db;
        best = static_cast<int>(j);
      }
    }
    const int decoded = best_mer >= en.decode_threshold_db ? best : -1;
    rec.mer_db.push_back(mers);
    rec.decoded.push_back(decoded);
    const auto kk = static_cast<Eigen::Index>(k);
    const auto s = static_cast<Eigen::Index>(intended_[k]);
    double leak = 0.0;
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      if (j != s) leak += std::norm(M(kk, j));
    const double wanted = std::norm(M(kk, s));
    const double leak_db = wanted > 0.0 ? std::clamp(10.0 * std::log10(std::max(leak / wanted, 1e-30)), -300.0, 300.0) : 300.0;
    rec.leakage_db.push_back(leak_db);
    if (rec.counted) {
      auto& a = acc_[k];
      ++a.windows;
      a.inv_mer_sum += std::isfinite(own.mer_db) ? db_to_linear(-own.mer_db) : 0.0;
      ++a.decoded[decoded];
      a.leakage_lin_sum += db_to_linear(leak_db);
      const std::size_t keep = std::min(m, en.constellation_points);
      if (rep_.constellations.size() < n_ut_) rep_.constellations.resize(n_ut_);
      auto& c = rep_.constellations[k];
      c.assign(keep, Complex{});
      const Complex g = std::abs(own.gain) > 0.0 ? own.gain : Complex{1.0, 0.0};
      for (std::size_t i = 0; i < keep; ++i) c[i] = y[k][i] / g;
    }
  }
  rep_.windows.push_back(std::move(rec));
}

void ClosedLoop::finish() {
  rep_.residual = residual_.finalize(
      sc_.sync.histogram_bin_deg,
      static_cast<std::size_t>(std::max<std::int64_t>(1, tau_samples_ / static_cast<std::int64_t>(sc_.sync.residual_decimation))));
  rep_.residual_times = residual_.times();

  rep_.uts.resize(n_ut_);
  std::size_t counted = 0;
  for (const auto& w : rep_.windows) counted += w.counted ? 1 : 0;
  rep_.windows_counted = counted;
  for (std::size_t k = 0; k < n_ut_; ++k) {
    auto& u = rep_.uts[k];
    const auto& a = acc_[k];
    u.id = uts_[k]->id;
    u.intended_stream = intended_[k];
    u.predicted_gain_db = predicted_gain_[k];
    if (a.windows == 0) {
      u.mer_db = -std::numeric_limits<double>::infinity();
      continue;
    }
    u.mer_db = a.inv_mer_sum > 0.0 ? linear_to_db(static_cast<double>(a.windows) / a.inv_mer_sum)
                                   : std::numeric_limits<double>::infinity();
    std::size_t best_count = 0;
    for (const auto& [stream, cnt] : a.decoded)
      if (cnt > best_count) {
        best_count = cnt;
        u.decoded_stream = stream;
      }
    const auto it = a.decoded.find(intended_[k]);
    u.decode_fraction = it == a.decoded.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(a.windows);
    u.leakage_db = std::max(-300.0, linear_to_db(std::max(a.leakage_lin_sum / static_cast<double>(a.windows), 1e-30)));
  }
  // Each stream is credited once, to its best decoding terminal.
  rep_.per_user_rate.assign(n_ut_, 0.0);
  for (std::size_t k = 0; k < n_ut_; ++k) {
    auto& u = rep_.uts[k];
    if (u.decoded_stream != u.intended_stream) continue;
    bool best = true;
    for (std::size_t o = 0; o < n_ut_; ++o) {
      if (o == k) continue;
      const auto& v = rep_.uts[o];
      if (v.intended_stream != u.intended_stream || v.decoded_stream != v.intended_stream) continue;
      if (v.mer_db > u.mer_db || (v.mer_db == u.mer_db && o < k)) best = false;
    }
    if (best) u.rate = snr_to_rate(std::min(u.mer_db, kMerFileCapDb));
    rep_.per_user_rate[k] = u.rate;
  }
  rep_.sum_rate = 0.0;
  for (double r : rep_.per_user_rate) rep_.sum_rate += r;
}

MetricsReport ClosedLoop::execute() {
  const SimTime block_ns = to_ns(static_cast<double>(block_samples_) / fs_);
  const std::int64_t n_blocks = total_samples_ / block_samples_;
  queue_.push(block_ns, EventType::pll_block, 0);
  const double slot_len = static_cast<double>(sc_.csi.pilot_length) / sc_.csi.pilot_rate_hz;
  for (std::size_t s = 0; s < pilot_starts_.size(); ++s)
    queue_.push(to_ns(pilot_starts_[s] + slot_len), EventType::pilot_slot, s);
  for (std::size_t g = 0; g < opt_.replay.size(); ++g)
    queue_.push(to_ns(opt_.replay[g].time_s), EventType::csi_delivery, g);
  for (std::size_t j = 0; j < window_starts_.size(); ++j)
    queue_.push(to_ns(window_starts_[j] + sc_.engine.metric_window_s), EventType::metric_window, j);

  while (!queue_.empty()) {
    const Event e = queue_.pop();
    const double t = to_s(e.time);
    switch (e.type) {
      case EventType::pll_block: {
        const auto b = static_cast<std::int64_t>(e.payload);
        process_block(b);
        if (b + 1 < n_blocks) queue_.push(e.time + block_ns, EventType::pll_block, e.payload + 1);
        break;
      }
      case EventType::pilot_slot: on_pilot_slot(e.payload, t); break;
      case EventType::csi_delivery: on_csi_delivery(e.payload, t); break;
      case EventType::precoder_update: on_precoder_update(e.payload, t); break;
      case EventType::metric_window: on_metric_window(e.payload, t); break;
    }
  }
  finish();
  return std::move(rep_);
}

}  // namespace

MetricsReport run(const Scenario& scenario, Mode mode, const RunOptions& options) {
  ClosedLoop loop(scenario, mode, options);
  return loop.execute();
}

ComparisonSummary compare_modes(const MetricsReport& reference, const MetricsReport& candidate) {
  if (reference.scenario_name != candidate.scenario_name ||
      reference.config_hash != candidate.config_hash || reference.seed != candidate.seed)
    throw std::invalid_argument("compare_modes: reports come from different scenarios or seeds");
  if (reference.uts.size() != candidate.uts.size())
    throw std::invalid_argument("compare_modes: user terminal sets differ");
  ComparisonSummary c;
  auto label = [](int s) { return s < 0 ? std::string("none") : "stream " + std::to_string(s + 1); };
  for (std::size_t k = 0; k < reference.uts.size(); ++k) {
    const auto& a = reference.uts[k];
    const auto& b = candidate.uts[k];
    if (a.id != b.id) throw std::invalid_argument("compare_modes: user terminal sets differ");
    c.ut_ids.push_back(a.id);
    c.mer_delta_db.push_back(b.mer_db - a.mer_db);
    c.decode_transition.push_back(label(a.decoded_stream) + " -> " + label(b.decoded_stream));
  }
  c.rate_reference = reference.sum_rate;
  c.rate_candidate = candidate.sum_rate;
  c.rate_ratio = reference.sum_rate > 0.0 ? candidate.sum_rate / reference.sum_rate
                                          : (candidate.sum_rate > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  return c;
}

}  // namespace satmimo
