// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0

#include "keymux/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "keymux/client.hpp"
#include "keymux/http_carrier.hpp"
#include "keymux/kem.hpp"
#include "keymux/proxy.hpp"
#include "keymux/qkms.hpp"
#include "keymux/stats.hpp"

namespace keymux::bench {

namespace {

constexpr const char* kHost = "127.0.0.1";

int64_t wall_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

channels::MediumType medium_cycle(uint32_t i) {
  switch (i % 5) {
    case 0: return channels::MediumType::WiFi;
    case 1: return channels::MediumType::Bluetooth;
    case 2: return channels::MediumType::Cellular;
    case 3: return channels::MediumType::Ethernet;
    default: return channels::MediumType::LogicalPort;
  }
}

channels::ChannelSet make_channels(const std::string& prefix, uint32_t count) {
  channels::ChannelSet set;
  for (uint32_t i = 0; i < count; ++i) {
    channels::ChannelDescriptor ch;
    ch.channel_id = prefix + "-ch-" + std::to_string(i);
    ch.medium = medium_cycle(i);
    ch.host = kHost;
    ch.port = 0;  // receivers bind ephemerally and patch this
    set.push_back(ch);
  }
  return set;
}

std::vector<std::unique_ptr<kem::KemProvider>> kem_set() {
  std::vector<std::unique_ptr<kem::KemProvider>> kems;
  kems.push_back(kem::make_kem("stub"));
  kems.push_back(kem::make_kem("ml-kem-768"));
  return kems;
}

}  // namespace

void validate(const BenchConfig& cfg) {
  if (cfg.runs < 1) throw Error(ErrorKind::Parameter, "runs must be >= 1");
  if (cfg.mode != "classical" && cfg.mode != "pq-tunnel") {
    throw Error(ErrorKind::Parameter, "mode must be classical or pq-tunnel");
  }
  if (cfg.num_channels < 1) throw Error(ErrorKind::Parameter, "need at least one channel");
  keycore::encrypt_mode_from_string(cfg.encrypt_mode);  // throws on junk
  if (cfg.mode == "pq-tunnel") kem::make_kem(cfg.kem);  // ditto
}

BenchResult run_bench(const BenchConfig& cfg) {
  validate(cfg);

  // Distinct posters per role: a poster serializes its calls, so the
  // request leg and the fragment leg must not share one (the request POST
  // is still in flight while the dispatch it triggered posts fragments).
  net::HttpPoster request_poster;
  net::HttpPoster fragment_poster;
  net::HttpPoster proxy_poster;

  SeededRng qkms_rng(derive_seed(cfg.seed, 1));
  SeededRng client_rng(derive_seed(cfg.seed, 2));
  SeededRng proxy_rng(derive_seed(cfg.seed, 3));

  net::HttpFragmentCarrier carrier(fragment_poster);
  channels::ChannelTransport transport(carrier, qkms_rng);

  qkms::QkmsConfig qkms_cfg;
  qkms_cfg.encrypt_mode = keycore::encrypt_mode_from_string(cfg.encrypt_mode);
  qkms::QkmsCore qkms_core(qkms_cfg, transport, qkms_rng);
  qkms::QkmsServer qkms_server(qkms_core, kem_set(), qkms_rng);
  int qkms_port = qkms_server.start(kHost, 0);
  protocol::Endpoint qkms_ep{kHost, qkms_port};

  keycore::AsymmetricKeyPair pair_a = keycore::AsymmetricKeyPair::generate();
  keycore::AsymmetricKeyPair pair_b = keycore::AsymmetricKeyPair::generate();

  client::PostFn poster_fn = [&request_poster](const protocol::Endpoint& to,
                                               const std::string& path,
                                               const protocol::Json& body) {
    return request_poster.post_json(to.host, to.port, path, body);
  };
  client::ClientCore core_a(pair_a, client_rng, poster_fn);
  client::ClientCore core_b(pair_b, client_rng, poster_fn);
  client::ClientReceivers recv_a(core_a);
  client::ClientReceivers recv_b(core_b);

  channels::ChannelSet channels_a = make_channels(cfg.config_id + "-a", cfg.num_channels);
  channels::ChannelSet channels_b = make_channels(cfg.config_id + "-b", cfg.num_channels);
  recv_a.open_channels(channels_a);
  recv_b.open_channels(channels_b);

  // Optional plain proxy in front of the QKMS.  Clients then send their
  // requests to the proxy and receive fragments on their return endpoints.
  std::unique_ptr<proxy::HttpProxyNetwork> proxy_net;
  std::unique_ptr<proxy::ProxyCore> proxy_core;
  std::unique_ptr<proxy::ProxyServer> proxy_server;
  protocol::Endpoint target = qkms_ep;
  if (cfg.via_proxy) {
    proxy::ProxyConfig pcfg;
    pcfg.id = cfg.config_id + "-proxy";
    pcfg.own_channels = make_channels(pcfg.id, cfg.num_channels);
    pcfg.qkms = qkms_ep;
    proxy_net = std::make_unique<proxy::HttpProxyNetwork>(proxy_poster);
    proxy_core = std::make_unique<proxy::ProxyCore>(pcfg, *proxy_net, proxy_rng);
    proxy_server = std::make_unique<proxy::ProxyServer>(*proxy_core, kem_set(), proxy_rng);
    int proxy_port = proxy_server->start(kHost, 0);
    target = {kHost, proxy_port};
    core_a.set_return_endpoint(recv_a.open_return(kHost));
    core_b.set_return_endpoint(recv_b.open_return(kHost));
  }

  const std::string kem_name = cfg.mode == "pq-tunnel" ? cfg.kem : "";

  BenchResult result;
  result.records.reserve(static_cast<size_t>(cfg.runs) * 4);

  for (uint64_t trial = 0; trial < cfg.runs; ++trial) {
    std::string tag = cfg.config_id + "-t" + std::to_string(trial);
    qkms_core.clear_reports();

    auto session_params = [&](const std::string& label,
                              const channels::ChannelSet& chans) {
      client::SessionParams p;
      p.tagname = tag;
      p.key_bits = cfg.key_bits;
      p.num_splits = cfg.num_splits;
      p.shuffle = cfg.shuffle;
      p.channels = cfg.via_proxy ? channels::ChannelSet{} : chans;
      p.party_label = label;
      p.kem = kem_name;
      p.deadline_ms = cfg.trial_deadline_ms;
      return p;
    };

    bool ok = true;
    std::string failure;
    try {
      core_a.request_key(session_params("A", channels_a), target);
      core_b.request_key(session_params("B", channels_b), target);
      ok = core_a.wait_complete(tag, cfg.trial_deadline_ms) &&
           core_b.wait_complete(tag, cfg.trial_deadline_ms);
      if (ok && !(core_a.finalize(tag) == core_b.finalize(tag))) {
        ok = false;
        failure = "parties reconstructed different keys";
      }
    } catch (const Error& e) {
      ok = false;
      failure = e.what();
    }

    if (!ok) {
      TrialRecord bad;
      bad.config_id = cfg.config_id;
      bad.side = "client";
      bad.trial = trial;
      bad.timestamp_ms = wall_now_ms();
      bad.failed = true;
      result.records.push_back(std::move(bad));
      result.failures += 1;
      continue;
    }

    for (const auto& report : qkms_core.reports()) {
      TrialRecord rec;
      rec.config_id = cfg.config_id;
      rec.side = "qkms";
      rec.trial = trial;
      rec.timestamp_ms = wall_now_ms();
      rec.components_us["key_generation"] = report.timings.key_generation_us;
      rec.components_us["key_processing"] = report.timings.key_processing_us;
      rec.components_us["network"] = report.timings.network_us;
      rec.wall_us = report.timings.key_generation_us + report.timings.wall_us;
      result.records.push_back(std::move(rec));
    }
    for (client::ClientCore* core : {&core_a, &core_b}) {
      client::SessionTimings t = core->timings(tag);
      TrialRecord rec;
      rec.config_id = cfg.config_id;
      rec.side = "client";
      rec.trial = trial;
      rec.timestamp_ms = wall_now_ms();
      rec.components_us["decryption"] = t.decryption_us;
      rec.components_us["reconstruction"] = t.reconstruction_us;
      rec.components_us["network"] = t.network_us;
      if (!kem_name.empty()) rec.components_us["pq_kem"] = t.pq_kem_us;
      rec.wall_us = t.total_us;
      result.records.push_back(std::move(rec));
    }
  }

  if (proxy_server) proxy_server->stop();
  qkms_server.stop();
  recv_a.close();
  recv_b.close();
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::Parameter, "no records to summarize");
  std::map<std::pair<std::string, std::string>, std::vector<double>> buckets;
  for (const auto& rec : records) {
    if (rec.failed) continue;
    for (const auto& [component, us] : rec.components_us) {
      buckets[{rec.side, component}].push_back(us);
    }
    buckets[{rec.side, "wall"}].push_back(rec.wall_us);
  }
  if (buckets.empty()) throw Error(ErrorKind::Parameter, "all records are failures");

  std::vector<SummaryRow> rows;
  for (auto& [key, values] : buckets) {
    SummaryRow row;
    row.side = key.first;
    row.component = key.second;
    row.mean = stats::mean(values);
    row.median = stats::median(values);
    row.p95 = stats::percentile_nearest_rank(values, 95.0);
    row.p99 = stats::percentile_nearest_rank(values, 99.0);
    row.stddev = values.size() > 1 ? stats::stddev(values) : 0.0;
    row.samples = values.size();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string records_to_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << "config_id,side,trial,component,duration_us\n";
  out.precision(3);
  out << std::fixed;
  for (const auto& rec : records) {
    if (rec.failed) {
      out << rec.config_id << ',' << rec.side << ',' << rec.trial << ",failed,0\n";
      continue;
    }
    for (const auto& [component, us] : rec.components_us) {
      out << rec.config_id << ',' << rec.side << ',' << rec.trial << ',' << component << ','
          << us << '\n';
    }
    out << rec.config_id << ',' << rec.side << ',' << rec.trial << ",wall," << rec.wall_us
        << '\n';
  }
  return out.str();
}

std::vector<TrialRecord> records_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parameter, "empty CSV");
  std::map<std::tuple<std::string, std::string, uint64_t>, TrialRecord> by_key;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string config_id, side, trial_s, component, us_s;
    if (!std::getline(row, config_id, ',') || !std::getline(row, side, ',') ||
        !std::getline(row, trial_s, ',') || !std::getline(row, component, ',') ||
        !std::getline(row, us_s)) {
      throw Error(ErrorKind::Parameter, "malformed CSV row: " + line);
    }
    uint64_t trial = std::stoull(trial_s);
    TrialRecord& rec = by_key[{config_id, side, trial}];
    rec.config_id = config_id;
    rec.side = side;
    rec.trial = trial;
    if (component == "failed") {
      rec.failed = true;
    } else if (component == "wall") {
      rec.wall_us = std::stod(us_s);
    } else {
      rec.components_us[component] = std::stod(us_s);
    }
  }
  std::vector<TrialRecord> records;
  records.reserve(by_key.size());
  for (auto& [key, rec] : by_key) records.push_back(std::move(rec));
  return records;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "side,component,mean_us,median_us,p95_us,p99_us,stddev_us,samples\n";
  out.precision(3);
  out << std::fixed;
  for (const auto& row : rows) {
    out << row.side << ',' << row.component << ',' << row.mean << ',' << row.median << ','
        << row.p95 << ',' << row.p99 << ',' << row.stddev << ',' << row.samples << '\n';
  }
  return out.str();
}

std::string render_svg(const std::vector<SummaryRow>& rows) {
  if (rows.empty()) throw Error(ErrorKind::Parameter, "nothing to plot");
  double max_mean = 1.0;
  for (const auto& row : rows) max_mean = std::max(max_mean, row.mean);
  const double log_floor = -1.0;  // 0.1 us
  const double log_span = std::log10(max_mean) - log_floor;
  const int bar_h = 22, gap = 6, left = 230, width = 900;
  const int height = static_cast<int>(rows.size()) * (bar_h + gap) + 60;

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' font-family='monospace' font-size='13'>\n";
  svg << "<text x='10' y='20'>component means (log scale, microseconds)</text>\n";
  int y = 40;
  for (const auto& row : rows) {
    double value = std::max(row.mean, 0.1);
    double frac = (std::log10(value) - log_floor) / std::max(log_span, 1e-9);
    int w = static_cast<int>(frac * (width - left - 120));
    svg << "<text x='10' y='" << y + 15 << "'>" << row.side << "/" << row.component
        << "</text>\n";
    svg << "<rect x='" << left << "' y='" << y << "' width='" << std::max(w, 2) << "' height='"
        << bar_h << "' fill='" << (row.side == "qkms" ? "#4878a8" : "#a85848") << "'/>\n";
    svg.precision(1);
    svg << std::fixed << "<text x='" << left + std::max(w, 2) + 6 << "' y='" << y + 15 << "'>"
        << row.mean << "</text>\n";
    y += bar_h + gap;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace keymux::bench

