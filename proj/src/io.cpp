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

#include "satmimo/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "satmimo/config.hpp"
#include "satmimo/waveform.hpp"

namespace satmimo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double capped(double mer_db) { return std::clamp(mer_db, -kMerFileCapDb, kMerFileCapDb); }

json finite_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::string mode_label(PrecoderMode m) {
  switch (m) {
    case PrecoderMode::zf: return "zf";
    case PrecoderMode::siso_baseline: return "siso-baseline";
    case PrecoderMode::passthrough: return "passthrough";
  }
  return "unknown";
}

json matrix_json(const CMatrix& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re.push_back(m(r, c).real());
      im.push_back(m(r, c).imag());
    }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

CMatrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (re.size() != static_cast<std::size_t>(rows * cols) || im.size() != re.size())
    throw std::invalid_argument("matrix record has the wrong number of entries");
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto i = static_cast<std::size_t>(r * cols + c);
      m(r, c) = {re[i].get<double>(), im[i].get<double>()};
    }
  return m;
}

class OutputSet {
 public:
  explicit OutputSet(fs::path root) : root_(std::move(root)) {}

  std::ofstream open(const std::string& rel) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    files_.push_back(rel);
    return f;
  }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

void write_series(OutputSet& out, const MetricsReport& r, const std::vector<std::string>& ut_ids) {
  const std::string m = mode_name(r.mode);
  {
    auto f = out.open("timeseries/" + m + "_mer.csv");
    f << "t,ut,counted,zf_active,decoded_stream";
    const std::size_t streams = r.windows.empty() ? 0 : r.windows.front().mer_db.front().size();
    for (std::size_t j = 0; j < streams; ++j) f << ",mer_stream" << j + 1 << "_db";
    f << ",leakage_db\n";
    for (const auto& w : r.windows)
      for (std::size_t k = 0; k < w.mer_db.size(); ++k) {
        f << num(w.t) << ',' << ut_ids[k] << ',' << (w.counted ? 1 : 0) << ',' << (w.zf_active ? 1 : 0) << ','
          << (w.decoded[k] < 0 ? 0 : w.decoded[k] + 1);
        for (double v : w.mer_db[k]) f << ',' << num(capped(v));
        f << ',' << num(w.leakage_db[k]) << '\n';
      }
  }
  {
    auto f = out.open("timeseries/" + m + "_pll.csv");
    const std::size_t n = r.pll_series.empty() ? 0 : r.pll_series.front().locked.size();
    f << "t";
    for (std::size_t i = 0; i < n; ++i)
      f << ",est_offset" << i + 1 << "_hz,true_offset" << i + 1 << "_hz,locked" << i + 1;
    f << '\n';
    for (const auto& s : r.pll_series) {
      f << num(s.t);
      for (std::size_t i = 0; i < n; ++i)
        f << ',' << num(s.estimated_offset_hz[i]) << ',' << num(s.true_offset_hz[i]) << ',' << (s.locked[i] ? 1 : 0);
      f << '\n';
    }
  }
  {
    auto f = out.open("timeseries/" + m + "_impairments.csv");
    const std::size_t n = r.impairment_series.empty() ? 0 : r.impairment_series.front().converter_hz.size();
    const std::size_t k = r.impairment_series.empty() ? 0 : r.impairment_series.front().lnb_hz.size();
    f << "t";
    for (std::size_t i = 0; i < n; ++i) f << ",f_con" << i + 1;
    for (std::size_t i = 0; i < k; ++i) f << ",f_lnb" << i + 1;
    for (std::size_t i = 0; i < n; ++i) f << ",doppler" << i + 1;
    f << '\n';
    for (const auto& s : r.impairment_series) {
      f << num(s.t);
      for (double v : s.converter_hz) f << ',' << num(v);
      for (double v : s.lnb_hz) f << ',' << num(v);
      for (double v : s.doppler_hz) f << ',' << num(v);
      f << '\n';
    }
  }
  {
    auto f = out.open("timeseries/" + m + "_residual_phase.csv");
    f << "t,deg\n";
    for (std::size_t i = 0; i < r.residual.samples_deg.size(); ++i)
      f << num(r.residual_times[i]) << ',' << num(r.residual.samples_deg[i]) << '\n';
  }
  for (std::size_t k = 0; k < r.constellations.size(); ++k) {
    auto f = out.open("constellations/" + m + "_" + ut_ids[k] + ".csv");
    f << "re,im\n";
    for (const auto& c : r.constellations[k]) f << num(c.real()) << ',' << num(c.imag()) << '\n';
  }
  {
    auto f = out.open("csi/" + m + "_snapshots.json");
    json arr = json::array();
    const std::size_t k = std::max<std::size_t>(1, ut_ids.size());
    for (std::size_t i = 0; i < r.csi_snapshots.size(); ++i) {
      const std::size_t g = i / k;
      std::optional<double> d;
      if (g < r.csi_delivery_times.size()) d = r.csi_delivery_times[g];
      arr.push_back(to_json(r.csi_snapshots[i], d));
    }
    f << arr.dump(1) << '\n';
  }
}

}  // namespace

json to_json(const ChannelMatrix& h) {
  json j = matrix_json(h.entries);
  j["carrier_hz"] = h.carrier_hz;
  j["timestamp_s"] = h.timestamp_s;
  j["source"] = h.source == ChannelSource::geometric ? "geometric" : "estimated";
  return j;
}

ChannelMatrix channel_from_json(const json& j) {
  ChannelMatrix h;
  h.entries = matrix_from(j);
  h.carrier_hz = j.value("carrier_hz", 0.0);
  h.timestamp_s = j.value("timestamp_s", 0.0);
  h.source = j.value("source", std::string("estimated")) == "geometric" ? ChannelSource::geometric
                                                                         : ChannelSource::estimated;
  return h;
}

json to_json(const PrecodingMatrix& p) {
  json j = matrix_json(p.entries);
  j["lambda"] = p.lambda;
  j["mode"] = mode_label(p.mode);
  return j;
}

json to_json(const CsiSnapshot& s, std::optional<double> delivery_time_s) {
  json j;
  j["ut_id"] = s.ut_id;
  j["t"] = s.h_est.timestamp_s;
  j["measurement_times"] = s.measurement_times;
  j["n_averaged"] = s.n_averaged;
  j["matrix"] = to_json(s.h_est);
  if (delivery_time_s) j["delivery_time_s"] = *delivery_time_s;
  return j;
}

std::vector<CsiDelivery> replay_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("replay file must hold a JSON array");
  std::vector<CsiDelivery> out;
  for (const auto& rec : j) {
    CsiDelivery d;
    d.snapshot.ut_id = rec.at("ut_id").get<std::string>();
    d.snapshot.h_est = channel_from_json(rec.at("matrix"));
    d.snapshot.h_est.source = ChannelSource::estimated;
    d.snapshot.n_averaged = rec.value("n_averaged", std::size_t{1});
    d.snapshot.measurement_times = rec.value("measurement_times", std::vector<double>{});
    d.time_s = rec.at("delivery_time_s").get<double>();
    out.push_back(std::move(d));
  }
  std::stable_sort(out.begin(), out.end(), [](const CsiDelivery& a, const CsiDelivery& b) { return a.time_s < b.time_s; });
  return out;
}

std::vector<CsiDelivery> load_replay(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read replay file " + path.string());
  return replay_from_json(json::parse(in));
}

json to_json(const ResidualPhaseStats& s) {
  json h;
  h["edges_deg"] = s.histogram.edges_deg;
  h["probabilities"] = s.histogram.probabilities;
  return {{"n", s.samples_deg.size()},
          {"mean_deg", s.mean_deg},
          {"std_deg", s.std_deg},
          {"skewness", s.skewness},
          {"excess_kurtosis", s.excess_kurtosis},
          {"jarque_bera", s.jarque_bera},
          {"jarque_bera_samples", s.jb_samples},
          {"histogram", h}};
}

json to_json(const MetricsReport& r) {
  json j;
  j["scenario"] = r.scenario_name;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["mode"] = mode_name(r.mode);
  j["duration_s"] = r.duration_s;
  j["windows_counted"] = r.windows_counted;
  j["sum_rate"] = r.sum_rate;
  j["per_user_rate"] = r.per_user_rate;
  j["uts"] = json::array();
  for (const auto& u : r.uts)
    j["uts"].push_back({{"id", u.id},
                        {"intended_stream", u.intended_stream + 1},
                        {"mer_db", capped(u.mer_db)},
                        {"decode_fraction", u.decode_fraction},
                        {"decoded_stream", u.decoded_stream < 0 ? 0 : u.decoded_stream + 1},
                        {"decodes", u.decoded_stream >= 0},
                        {"leakage_db", u.leakage_db},
                        {"rate", u.rate},
                        {"predicted_gain_db", u.predicted_gain_db}});
  j["residual_phase"] = to_json(r.residual);
  j["lock_timeline"] = json::array();
  for (const auto& l : r.lock_timeline)
    j["lock_timeline"].push_back({{"t", l.t}, {"satellite", l.satellite + 1}, {"locked", l.locked}});
  j["precoders"] = json::array();
  for (const auto& p : r.precoders) {
    json e = to_json(p.precoder);
    e["t"] = p.t;
    e["note"] = p.note;
    j["precoders"].push_back(e);
  }
  return j;
}

json to_json(const ComparisonSummary& c) {
  json j;
  j["uts"] = json::array();
  for (std::size_t k = 0; k < c.ut_ids.size(); ++k)
    j["uts"].push_back({{"id", c.ut_ids[k]},
                        {"mer_delta_db", finite_or_null(c.mer_delta_db[k])},
                        {"decode_transition", c.decode_transition[k]}});
  j["rate_reference"] = c.rate_reference;
  j["rate_candidate"] = c.rate_candidate;
  j["rate_ratio"] = finite_or_null(c.rate_ratio);
  return j;
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  r.scenario_name = j.at("scenario").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.mode = parse_mode(j.at("mode").get<std::string>());
  r.duration_s = j.value("duration_s", 0.0);
  r.sum_rate = j.at("sum_rate").get<double>();
  r.per_user_rate = j.value("per_user_rate", std::vector<double>{});
  r.windows_counted = j.value("windows_counted", std::size_t{0});
  for (const auto& u : j.at("uts")) {
    UtReport x;
    x.id = u.at("id").get<std::string>();
    x.intended_stream = u.value("intended_stream", 1) - 1;
    x.mer_db = u.at("mer_db").get<double>();
    x.decode_fraction = u.value("decode_fraction", 0.0);
    x.decoded_stream = u.value("decoded_stream", 0) - 1;
    x.leakage_db = u.value("leakage_db", -300.0);
    x.rate = u.value("rate", 0.0);
    x.predicted_gain_db = u.value("predicted_gain_db", 0.0);
    r.uts.push_back(x);
  }
  return r;
}

int run_command(RunManifest manifest, bool force, std::ostream& log) {
  Scenario sc;
  try {
    sc = parse_scenario(manifest.scenario);
    if (manifest.seed) sc.seed = *manifest.seed;
    if (manifest.duration_s) sc.duration_s = *manifest.duration_s;
    std::vector<std::string> errs;
    for (Mode m : manifest.modes) {
      auto e = validate_for_mode(sc, m);
      errs.insert(errs.end(), e.begin(), e.end());
    }
    if (!errs.empty()) throw ScenarioError(errs);
  } catch (const ScenarioError& e) {
    log << e.what() << '\n';
    return 2;
  }
  manifest.config_hash = config_hash(sc);

  std::error_code ec;
  if (fs::exists(manifest.out_dir, ec) && !fs::is_empty(manifest.out_dir, ec) && !force) {
    log << "output directory " << manifest.out_dir.string() << " is not empty; use --force to overwrite\n";
    return 4;
  }
  if (force && fs::exists(manifest.out_dir, ec)) {
    for (const char* sub : {"timeseries", "constellations", "csi"}) fs::remove_all(manifest.out_dir / sub, ec);
    for (const char* f : {"metrics.json", "residual_phase_hist.csv"}) fs::remove(manifest.out_dir / f, ec);
  }

  RunOptions opt;
  if (!sc.csi.replay_path.empty()) {
    try {
      opt.replay = load_replay(sc.csi.replay_path);
    } catch (const std::exception& e) {
      log << "cannot load CSI replay: " << e.what() << '\n';
      return 2;
    }
  }

  std::vector<MetricsReport> reports;
  std::string diagnostic;
  try {
    for (Mode m : manifest.modes) {
      log << "running " << mode_name(m) << " (" << sc.duration_s << " s)...\n";
      reports.push_back(run(sc, m, opt));
    }
  } catch (const SimulationAborted& e) {
    diagnostic = e.what();
  }

  std::vector<std::string> ut_ids;
  for (const auto* u : sc.user_terminals()) ut_ids.push_back(u->id);
  try {
    fs::create_directories(manifest.out_dir);
    OutputSet out(manifest.out_dir);
    json doc;
    doc["reports"] = json::object();
    for (const auto& r : reports) {
      write_series(out, r, ut_ids);
      doc["reports"][mode_name(r.mode)] = to_json(r);
    }
    if (!reports.empty()) {
      auto f = out.open("residual_phase_hist.csv");
      f << "mode,bin_lo_deg,bin_hi_deg,probability\n";
      for (const auto& r : reports) {
        const auto& h = r.residual.histogram;
        for (std::size_t b = 0; b < h.probabilities.size(); ++b)
          f << mode_name(r.mode) << ',' << num(h.edges_deg[b]) << ',' << num(h.edges_deg[b + 1]) << ','
            << num(h.probabilities[b]) << '\n';
      }
    }
    const MetricsReport* ref = nullptr;
    const MetricsReport* cand = nullptr;
    for (const auto& r : reports) {
      if (r.mode == Mode::siso) ref = &r;
      if (r.mode == Mode::mimo) cand = &r;
    }
    doc["comparison"] = (ref && cand) ? to_json(compare_modes(*ref, *cand)) : json(nullptr);
    doc["diagnostic"] = diagnostic.empty() ? json(nullptr) : json(diagnostic);
    json mf;
    mf["scenario"] = manifest.scenario;
    mf["scenario_name"] = sc.name;
    json modes = json::array();
    for (Mode m : manifest.modes) modes.push_back(mode_name(m));
    mf["modes"] = modes;
    mf["seed"] = sc.seed;
    mf["duration_s"] = sc.duration_s;
    mf["out_dir"] = manifest.out_dir.string();
    mf["tool_version"] = manifest.tool_version;
    mf["config_hash"] = manifest.config_hash;
    auto files = out.files();
    files.insert(files.begin(), "metrics.json");
    mf["files"] = files;
    doc["manifest"] = mf;
    std::ofstream f(manifest.out_dir / "metrics.json", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write metrics.json");
    f << doc.dump(2) << '\n';
  } catch (const std::exception& e) {
    log << "output error: " << e.what() << '\n';
    return 4;
  }
  if (!diagnostic.empty()) {
    log << "simulation aborted: " << diagnostic << '\n';
    return 3;
  }
  for (const auto& r : reports) {
    log << mode_name(r.mode) << ": sum rate " << r.sum_rate << " bit/s/Hz;";
    for (const auto& u : r.uts)
      log << ' ' << u.id << " MER " << capped(u.mer_db) << " dB"
          << (u.decoded_stream >= 0 ? " decodes stream " + std::to_string(u.decoded_stream + 1) : " no decode")
          << ';';
    log << " residual phase std " << r.residual.std_deg << " deg\n";
  }
  return 0;
}

int compare_command(const fs::path& reference, Mode reference_mode, const fs::path& candidate,
                    Mode candidate_mode, std::ostream& out) {
  auto load = [](const fs::path& p, Mode m) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    const json doc = json::parse(in);
    const auto& reps = doc.at("reports");
    const std::string key = mode_name(m);
    if (!reps.contains(key)) throw std::runtime_error(p.string() + " has no " + key + " report");
    return report_from_json(reps.at(key));
  };
  try {
    const auto a = load(reference, reference_mode);
    const auto b = load(candidate, candidate_mode);
    out << to_json(compare_modes(a, b)).dump(2) << '\n';
  } catch (const std::exception& e) {
    out << "compare failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace satmimo
