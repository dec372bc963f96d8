// Copyright 2026 The KeyMux Authors
// SPDX-License-Identifier: Apache-2.0
//
// Operator entry point.  One binary exposes the services (key server,
// proxy), a one-shot client, kiosk credential handling, the security
// analyzer, and the latency bench:
//
//   keymux qkms serve --port 7000
//   keymux proxy serve --qkms 127.0.0.1:7000 --port 7100
//   keymux client request --tagname t1 --to 127.0.0.1:7100
//   keymux kiosk issue --address 127.0.0.1:7100 --validity-s 900
//   keymux analyze optimum --budget 1 --allocation 2,2,2,2
//   keymux bench run --config bench.json --out records.csv

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdarg>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "keymux/analyzer.hpp"
#include "keymux/bench.hpp"
#include "keymux/bootstrap.hpp"
#include "keymux/client.hpp"
#include "keymux/http_carrier.hpp"
#include "keymux/proxy.hpp"
#include "keymux/qkms.hpp"
#include "keymux/stats.hpp"

using namespace keymux;

namespace {

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

std::string fmt_row(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  char buf[512];
  vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

void block_until_signalled() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
}

protocol::Endpoint parse_endpoint(const std::string& text) {
  const size_t colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 >= text.size()) {
    throw Error(ErrorKind::Parameter, "endpoint must be host:port, got \"" + text + "\"");
  }
  return {text.substr(0, colon), std::stoi(text.substr(colon + 1))};
}

std::vector<std::unique_ptr<kem::KemProvider>> make_kems(const std::vector<std::string>& names) {
  std::vector<std::unique_ptr<kem::KemProvider>> v;
  for (const std::string& n : names) v.push_back(kem::make_kem(n));
  return v;
}

channels::ChannelSet make_channels(const std::string& prefix, const std::string& host,
                                   int count) {
  channels::ChannelSet set;
  for (int i = 0; i < count; ++i) {
    channels::ChannelDescriptor ch;
    ch.channel_id = prefix + "-" + std::to_string(i);
    ch.host = host;
    set.push_back(ch);
  }
  return set;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Parameter, "cannot open " + path + " for writing");
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parameter, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join_counts(const std::vector<uint64_t>& counts) {
  std::string s;
  for (size_t i = 0; i < counts.size(); ++i) {
    if (i) s += "|";
    s += std::to_string(counts[i]);
  }
  return s;
}

// --- service commands -------------------------------------------------------

struct QkmsServeOpts {
  std::string host = "127.0.0.1";
  int port = 7000;
  std::string encrypt_mode = "direct-asymmetric";
  int64_t pairing_window_ms = 30'000;
  std::vector<std::string> kems{"stub", "ml-kem-768"};
  uint64_t seed = 0;  // 0 = OS randomness
};

int run_qkms_serve(const QkmsServeOpts& o) {
  net::HttpPoster fragment_poster, notice_poster;
  SystemRng system_rng;
  std::unique_ptr<SeededRng> seeded;
  Rng* rng = &system_rng;
  if (o.seed != 0) {
    seeded = std::make_unique<SeededRng>(o.seed);
    rng = seeded.get();
  }

  net::HttpFragmentCarrier carrier(fragment_poster);
  channels::ChannelTransport transport(carrier, *rng);
  qkms::QkmsConfig cfg;
  cfg.encrypt_mode = keycore::encrypt_mode_from_string(o.encrypt_mode);
  cfg.pairing_window_ms = o.pairing_window_ms;
  qkms::QkmsCore core(cfg, transport, *rng);
  core.set_failure_notifier([&notice_poster](const protocol::Endpoint& ep,
                                             const std::string& tag, const std::string& reason) {
    notice_poster.post_json(ep.host, ep.port, protocol::kSessionFailed,
                            protocol::Json{{"tagname", tag}, {"reason", reason}});
  });
  qkms::QkmsServer server(core, make_kems(o.kems), *rng);
  const int port = server.start(o.host, o.port);
  std::fprintf(stderr, "qkms listening on %s:%d (encrypt=%s, window=%lldms)\n", o.host.c_str(),
               port, o.encrypt_mode.c_str(), (long long)o.pairing_window_ms);
  block_until_signalled();
  server.stop();
  return 0;
}

struct ProxyServeOpts {
  std::string id = "proxy-0";
  std::string host = "127.0.0.1";
  int port = 7100;
  std::string qkms = "127.0.0.1:7000";
  int channel_count = 2;
  std::vector<std::string> pool;  // id=host:port entries, self included
  double forward_probability = 0.0;
  uint32_t max_hops = 1;
  double beta = 1.0;
  bool exclude_self = false;
  std::vector<std::string> kems{"stub", "ml-kem-768"};
  uint64_t seed = 0;
};

int run_proxy_serve(const ProxyServeOpts& o) {
  net::HttpPoster poster;
  SystemRng system_rng;
  std::unique_ptr<SeededRng> seeded;
  Rng* rng = &system_rng;
  if (o.seed != 0) {
    seeded = std::make_unique<SeededRng>(o.seed);
    rng = seeded.get();
  }

  proxy::ProxyConfig cfg;
  cfg.id = o.id;
  cfg.qkms = parse_endpoint(o.qkms);
  cfg.own_channels = make_channels(o.id, o.host, o.channel_count);
  cfg.forward_probability = o.forward_probability;
  cfg.max_hops = o.max_hops;
  cfg.beta = o.beta;
  cfg.exclude_self_in_draws = o.exclude_self;
  for (const std::string& entry : o.pool) {
    const size_t eq = entry.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Parameter, "pool entry must be id=host:port, got \"" + entry + "\"");
    }
    cfg.pool.push_back({entry.substr(0, eq), parse_endpoint(entry.substr(eq + 1))});
  }

  proxy::HttpProxyNetwork network(poster);
  proxy::ProxyCore core(cfg, network, *rng);
  proxy::ProxyServer server(core, make_kems(o.kems), *rng);
  const int port = server.start(o.host, o.port);
  std::fprintf(stderr, "proxy %s listening on %s:%d (qkms=%s, pool=%zu, q=%.2f)\n",
               o.id.c_str(), o.host.c_str(), port, o.qkms.c_str(), cfg.pool.size(),
               cfg.forward_probability);
  block_until_signalled();
  server.stop();
  return 0;
}

struct ClientRequestOpts {
  std::string tagname;
  std::string to = "127.0.0.1:7000";
  uint32_t key_bits = 256;
  uint16_t splits = 4;
  int channel_count = 2;
  std::string label = "A";
  std::string kem;
  bool no_shuffle = false;
  int64_t deadline_ms = 60'000;
  std::string host = "127.0.0.1";
};

int run_client_request(const ClientRequestOpts& o) {
  net::HttpPoster poster;
  SystemRng rng;
  keycore::AsymmetricKeyPair keypair = keycore::AsymmetricKeyPair::generate();
  client::ClientCore core(keypair, rng,
                          [&poster](const protocol::Endpoint& to, const std::string& path,
                                    const protocol::Json& body) {
                            return poster.post_json(to.host, to.port, path, body);
                          });
  client::ClientReceivers receivers(core);

  client::SessionParams params;
  params.tagname = o.tagname;
  params.key_bits = o.key_bits;
  params.num_splits = o.splits;
  params.shuffle = !o.no_shuffle;
  params.party_label = o.label;
  params.kem = o.kem;
  params.deadline_ms = o.deadline_ms;
  if (o.channel_count > 0) {
    params.channels = make_channels("ch-" + o.label, o.host, o.channel_count);
    receivers.open_channels(params.channels);
  } else {
    core.set_return_endpoint(receivers.open_return(o.host));
  }

  const protocol::Ack ack = core.request_key(params, parse_endpoint(o.to));
  std::fprintf(stderr, "request acknowledged: %s\n", ack.message.c_str());
  if (!core.wait_complete(o.tagname, o.deadline_ms)) {
    const client::SessionStatus st = core.status(o.tagname);
    std::fprintf(stderr, "session incomplete: %u fragments held%s%s\n", st.fragments_held,
                 st.failure_reason.empty() ? "" : ", ", st.failure_reason.c_str());
    return 1;
  }
  const keycore::SessionKey key = core.finalize(o.tagname);
  const client::SessionTimings t = core.timings(o.tagname);
  std::fprintf(stderr,
               "established %u-bit key in %.1fms (decrypt %.1fms, reconstruct %.3fms, "
               "network %.1fms, kem %.1fms)\n",
               key.bits, t.total_us / 1000.0, t.decryption_us / 1000.0,
               t.reconstruction_us / 1000.0, t.network_us / 1000.0, t.pq_kem_us / 1000.0);
  std::printf("%s\n", to_hex(key.material.view()).c_str());
  return 0;
}

// --- kiosk commands ---------------------------------------------------------

int run_kiosk_issue(const std::string& address, int64_t validity_s,
                    const std::string& seed_hex, int64_t now) {
  cryptobox::SigningKey key;
  if (seed_hex.empty()) {
    key = cryptobox::SigningKey::generate();
  } else {
    key = cryptobox::SigningKey::from_raw(from_hex(seed_hex));
  }
  const bootstrap::Credential cred =
      bootstrap::issue_credential(address, validity_s, key, now);
  std::printf("credential %s\n", bootstrap::encode_credential(cred).c_str());
  std::printf("verify-key %s\n", to_hex(key.verify_key().to_raw()).c_str());
  std::fprintf(stderr, "expires %lld (epoch seconds)\n", (long long)cred.expiry_epoch_s);
  return 0;
}

int run_kiosk_verify(const std::string& text, const std::string& verify_key_hex, int64_t now) {
  bootstrap::VerifyResult result;
  try {
    const bootstrap::Credential cred = bootstrap::decode_credential(text);
    const cryptobox::VerifyKey key = cryptobox::VerifyKey::from_raw(from_hex(verify_key_hex));
    result = bootstrap::verify_credential(cred, key, now);
    if (result.accepted()) {
      std::printf("accepted proxy=%s expires=%lld\n", cred.proxy_address.c_str(),
                  (long long)cred.expiry_epoch_s);
      return 0;
    }
  } catch (const Error& e) {
    result = {bootstrap::VerifyStatus::Malformed, e.what()};
  }
  std::printf("rejected %s: %s\n", bootstrap::to_string(result.status).c_str(),
              result.reason.c_str());
  return 1;
}

// --- analyze commands -------------------------------------------------------

std::vector<uint64_t> parse_counts(const std::string& csv) {
  std::vector<uint64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoull(item));
  return out;
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

int run_analyze_recovery(const std::string& capacities,
                         const std::vector<std::string>& allocations,
                         const std::string& out_path) {
  analyzer::CapacityVector cap{parse_doubles(capacities), 0.0};
  std::string csv = "d,n,allocation,p_recovery\n";
  for (const std::string& alloc_csv : allocations) {
    const analyzer::Allocation alloc{parse_counts(alloc_csv)};
    const double p = analyzer::recovery_probability(cap, alloc);
    csv += fmt_row("%zu,%llu,%s,%.12g\n", alloc.types(), (unsigned long long)alloc.total(),
                   join_counts(alloc.counts).c_str(), p);
  }
  write_text(out_path, csv);
  return 0;
}

int run_analyze_optimum(const std::vector<double>& budgets,
                        const std::vector<std::string>& allocations,
                        const std::string& out_path) {
  std::string csv = "budget,d,n,allocation,p_star,c_star\n";
  for (double budget : budgets) {
    for (const std::string& alloc_csv : allocations) {
      const analyzer::Allocation alloc{parse_counts(alloc_csv)};
      const analyzer::AdversaryOptimum opt = analyzer::adversary_optimum(budget, alloc);
      std::string cs;
      for (size_t i = 0; i < opt.c_star.c.size(); ++i) {
        if (i) cs += "|";
        cs += fmt_row("%.6g", opt.c_star.c[i]);
      }
      csv += fmt_row("%.6g,%zu,%llu,%s,%.12g,%s\n", budget, alloc.types(),
                     (unsigned long long)alloc.total(), join_counts(alloc.counts).c_str(),
                     opt.p_star, cs.c_str());
    }
  }
  write_text(out_path, csv);
  return 0;
}

int run_analyze_diversity(const std::vector<double>& budgets, const std::vector<uint64_t>& ns,
                          const std::vector<double>& epsilons, const std::string& out_path) {
  std::string csv = "budget,n,epsilon,required_d\n";
  for (double b : budgets) {
    for (uint64_t n : ns) {
      for (double eps : epsilons) {
        csv += fmt_row("%.6g,%llu,%.6g,%llu\n", b, (unsigned long long)n, eps,
                       (unsigned long long)analyzer::required_diversity(b, n, eps));
      }
    }
  }
  write_text(out_path, csv);
  return 0;
}

int run_analyze_pool(uint32_t pool_size, uint32_t surveilled, const std::vector<double>& qs,
                     uint32_t h_max, uint64_t requests, uint64_t seed,
                     const std::string& out_path) {
  std::string csv =
      "P,a,q,h_max,expected_hops,p_full_path,p_entry_exit,"
      "sim_requests,sim_mean_hops,sim_full_path,sim_entry_exit,exit_chi2_p\n";
  for (double q : qs) {
    const analyzer::PoolParams params{pool_size, surveilled, q, h_max};
    csv += fmt_row("%u,%u,%.6g,%u,%.6g,%.8g,%.8g", pool_size, surveilled, q, h_max,
                   analyzer::expected_hops(q, h_max),
                   analyzer::pool_full_path_probability(params),
                   analyzer::pool_correlation_probability(params));
    if (requests > 0) {
      analyzer::PoolSimulator sim(params, seed);
      const analyzer::PoolSimSummary s = sim.run(requests);
      const stats::ChiSquare chi = stats::chi_square_uniform(s.exit_counts);
      csv += fmt_row(",%llu,%.6g,%.8g,%.8g,%.6g\n", (unsigned long long)s.requests,
                     s.mean_hops, s.full_path_freq(), s.pair_freq(), chi.p_value);
    } else {
      csv += ",,,,,\n";
    }
  }
  write_text(out_path, csv);
  return 0;
}

int run_analyze_verify(const std::string& out_path) {
  std::string csv = "check,subject,deviation,tolerance,pass\n";
  bool all_pass = true;
  auto row = [&](const std::string& check, const std::string& subject, double dev, double tol) {
    const bool pass = dev <= tol;
    all_pass = all_pass && pass;
    csv += fmt_row("%s,%s,%.3g,%.3g,%s\n", check.c_str(), subject.c_str(), dev, tol,
                   pass ? "yes" : "no");
  };

  // Optimizer vs. exhaustive grid search on representative shapes,
  // including budget-clamped ones.
  struct GridCase {
    double budget;
    std::vector<uint64_t> counts;
  };
  for (const GridCase& c : std::vector<GridCase>{{0.5, {1, 3}},
                                                 {1.0, {2, 2}},
                                                 {1.7, {1, 7}},
                                                 {1.2, {1, 2, 3}},
                                                 {2.5, {1, 1, 6}},
                                                 {2.9, {1, 1, 2}}}) {
    const double formula = analyzer::adversary_optimum(c.budget, {c.counts}).p_star;
    double grid = 0.0;
    analyzer::CapacityVector cap;
    cap.c.assign(c.counts.size(), 0.0);
    const analyzer::Allocation alloc{c.counts};
    const double step = 1e-3;
    if (c.counts.size() == 2) {
      for (int i = 0; i <= 1000; ++i) {
        const double c0 = i * step;
        if (c0 > c.budget + 1e-12) break;
        cap.c[0] = c0;
        cap.c[1] = std::clamp(c.budget - c0, 0.0, 1.0);
        grid = std::max(grid, analyzer::recovery_probability(cap, alloc));
      }
    } else {
      for (int i = 0; i <= 1000; ++i) {
        const double c0 = i * step;
        if (c0 > c.budget + 1e-12) break;
        cap.c[0] = c0;
        for (int j = 0; j <= 1000; ++j) {
          const double c1 = j * step;
          if (c0 + c1 > c.budget + 1e-12) break;
          cap.c[1] = c1;
          cap.c[2] = std::clamp(c.budget - c0 - c1, 0.0, 1.0);
          grid = std::max(grid, analyzer::recovery_probability(cap, alloc));
        }
      }
    }
    row("grid-agreement", "B=" + fmt_row("%.2g", c.budget) + " " + join_counts(c.counts),
        std::fabs(formula - grid), 1e-4);
  }

  // Monte-Carlo vs. enumeration at 3 standard errors.
  {
    const analyzer::CapacityVector cap{{0.6, 0.5, 0.4}, 0.0};
    const analyzer::Allocation alloc{{3, 2, 3}};
    const double exact_type = analyzer::enumerated_per_type_probability(cap, alloc);
    const double exact_frag = analyzer::recovery_probability(cap, alloc);
    const analyzer::MonteCarloResult mc = analyzer::monte_carlo_recovery(cap, alloc, 400'000, 7);
    row("monte-carlo", "per-type", std::fabs(mc.per_type_estimate - exact_type),
        3.0 * mc.per_type_stderr);
    row("monte-carlo", "fragment", std::fabs(mc.fragment_estimate - exact_frag),
        3.0 * mc.fragment_stderr);
  }

  // Protocol-level pool simulation vs. the closed-form laws.
  {
    const analyzer::PoolParams params{10, 3, 0.5, 8};
    analyzer::PoolSimulator sim(params, 11);
    const analyzer::PoolSimSummary s = sim.run(20'000);
    const double p_full = analyzer::pool_full_path_probability(params);
    row("pool-sim", "full-path", std::fabs(s.full_path_freq() - p_full),
        3.0 * std::sqrt(p_full * (1 - p_full) / double(s.requests)));
    const double p_pair = analyzer::pool_correlation_probability(params);
    row("pool-sim", "entry-exit", std::fabs(s.pair_freq() - p_pair),
        3.0 * std::sqrt(p_pair * (1 - p_pair) / double(s.pair_trials)));
    const double want = analyzer::expected_hops(params.q, params.h_max);
    row("pool-sim", "mean-hops", std::fabs(s.mean_hops - want),
        3.0 * s.hops_stddev / std::sqrt(double(s.requests)));
    const stats::ChiSquare chi = stats::chi_square_uniform(s.exit_counts);
    row("pool-sim", "exit-uniformity", chi.p_value > 0.01 ? 0.0 : 1.0, 0.5);
  }

  write_text(out_path, csv);
  std::fprintf(stderr, "analyze verify: %s\n", all_pass ? "all checks passed" : "CHECKS FAILED");
  return all_pass ? 0 : 1;
}

// --- bench commands ---------------------------------------------------------

bench::BenchConfig bench_config_from_json(const protocol::Json& j) {
  bench::BenchConfig cfg;
  cfg.config_id = j.value("config_id", cfg.config_id);
  cfg.runs = j.value("runs", cfg.runs);
  cfg.key_bits = j.value("key_bits", cfg.key_bits);
  cfg.num_splits = j.value("num_splits", cfg.num_splits);
  cfg.shuffle = j.value("shuffle", cfg.shuffle);
  cfg.num_channels = j.value("num_channels", cfg.num_channels);
  cfg.mode = j.value("mode", cfg.mode);
  cfg.kem = j.value("kem", cfg.kem);
  cfg.encrypt_mode = j.value("encrypt_mode", cfg.encrypt_mode);
  cfg.via_proxy = j.value("via_proxy", cfg.via_proxy);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.trial_deadline_ms = j.value("trial_deadline_ms", cfg.trial_deadline_ms);
  return cfg;
}

int run_bench_run(const std::string& config_path, const std::string& out_path) {
  const protocol::Json doc = protocol::Json::parse(read_text(config_path));
  std::vector<bench::BenchConfig> configs;
  if (doc.is_array()) {
    for (const protocol::Json& j : doc) configs.push_back(bench_config_from_json(j));
  } else {
    configs.push_back(bench_config_from_json(doc));
  }

  std::vector<bench::TrialRecord> all;
  uint32_t failures = 0;
  for (const bench::BenchConfig& cfg : configs) {
    bench::validate(cfg);
    std::fprintf(stderr, "running %s: %u trials...\n", cfg.config_id.c_str(), cfg.runs);
    const bench::BenchResult res = bench::run_bench(cfg);
    failures += res.failures;
    all.insert(all.end(), res.records.begin(), res.records.end());
  }

  write_text(out_path, bench::records_to_csv(all));
  std::cout << bench::summary_to_csv(bench::summarize(all));
  if (failures > 0) std::fprintf(stderr, "%u failed trials\n", failures);
  return 0;
}

int run_bench_plot(const std::string& in_path, const std::string& out_path) {
  const std::vector<bench::TrialRecord> records = bench::records_from_csv(read_text(in_path));
  write_text(out_path, bench::render_svg(bench::summarize(records)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KeyMux: multi-channel session-key establishment toolkit"};
  app.require_subcommand(1);

  // qkms serve
  QkmsServeOpts qkms_opts;
  CLI::App* qkms_cmd = app.add_subcommand("qkms", "key server");
  CLI::App* qkms_serve = qkms_cmd->add_subcommand("serve", "run the key server");
  qkms_serve->add_option("--host", qkms_opts.host);
  qkms_serve->add_option("--port", qkms_opts.port);
  qkms_serve->add_option("--encrypt-mode", qkms_opts.encrypt_mode)
      ->check(CLI::IsMember({"direct-asymmetric", "envelope"}));
  qkms_serve->add_option("--pairing-window-ms", qkms_opts.pairing_window_ms);
  qkms_serve->add_option("--kem", qkms_opts.kems, "enabled KEM providers")->delimiter(',');
  qkms_serve->add_option("--seed", qkms_opts.seed, "deterministic RNG seed (0 = OS)");

  // proxy serve
  ProxyServeOpts proxy_opts;
  CLI::App* proxy_cmd = app.add_subcommand("proxy", "transparent proxy");
  CLI::App* proxy_serve = proxy_cmd->add_subcommand("serve", "run a proxy");
  proxy_serve->add_option("--id", proxy_opts.id);
  proxy_serve->add_option("--host", proxy_opts.host);
  proxy_serve->add_option("--port", proxy_opts.port);
  proxy_serve->add_option("--qkms", proxy_opts.qkms, "upstream key server host:port");
  proxy_serve->add_option("--channels", proxy_opts.channel_count, "substituted channel count");
  proxy_serve->add_option("--pool", proxy_opts.pool, "pool member id=host:port (repeatable)");
  proxy_serve->add_option("--forward-probability", proxy_opts.forward_probability);
  proxy_serve->add_option("--max-hops", proxy_opts.max_hops);
  proxy_serve->add_option("--beta", proxy_opts.beta, "per-hop forwarding decay");
  proxy_serve->add_flag("--exclude-self", proxy_opts.exclude_self);
  proxy_serve->add_option("--kem", proxy_opts.kems)->delimiter(',');
  proxy_serve->add_option("--seed", proxy_opts.seed);

  // client request
  ClientRequestOpts client_opts;
  CLI::App* client_cmd = app.add_subcommand("client", "session client");
  CLI::App* client_request = client_cmd->add_subcommand("request", "establish one session key");
  client_request->add_option("--tagname", client_opts.tagname)->required();
  client_request->add_option("--to", client_opts.to, "key server or proxy host:port");
  client_request->add_option("--key-bits", client_opts.key_bits);
  client_request->add_option("--splits", client_opts.splits);
  client_request->add_option("--channels", client_opts.channel_count,
                             "receive channels (0 = proxy return endpoint)");
  client_request->add_option("--label", client_opts.label);
  client_request->add_option("--kem", client_opts.kem, "pq tunnel KEM (empty = classical)");
  client_request->add_flag("--no-shuffle", client_opts.no_shuffle);
  client_request->add_option("--deadline-ms", client_opts.deadline_ms);
  client_request->add_option("--bind-host", client_opts.host);

  // kiosk
  std::string kiosk_address, kiosk_seed_hex, kiosk_credential, kiosk_verify_key;
  int64_t kiosk_validity = 900, kiosk_now = 0;
  CLI::App* kiosk_cmd = app.add_subcommand("kiosk", "bootstrap credentials");
  CLI::App* kiosk_issue = kiosk_cmd->add_subcommand("issue", "issue a signed proxy credential");
  kiosk_issue->add_option("--address", kiosk_address, "proxy host:port")->required();
  kiosk_issue->add_option("--validity-s", kiosk_validity);
  kiosk_issue->add_option("--signing-seed", kiosk_seed_hex, "32-byte hex seed (default random)");
  kiosk_issue->add_option("--now", kiosk_now, "epoch seconds (default current time)");
  CLI::App* kiosk_verify = kiosk_cmd->add_subcommand("verify", "verify a credential");
  kiosk_verify->add_option("--credential", kiosk_credential)->required();
  kiosk_verify->add_option("--verify-key", kiosk_verify_key, "32-byte hex public key")->required();
  kiosk_verify->add_option("--now", kiosk_now);

  // analyze
  std::string an_capacities, an_out = "-";
  std::vector<std::string> an_allocations;
  std::vector<double> an_budgets{1.0}, an_epsilons{1e-4}, an_qs{0.5};
  std::vector<uint64_t> an_ns{8};
  uint32_t an_pool_size = 10, an_surveilled = 3, an_hmax = 8;
  uint64_t an_requests = 0, an_seed = 1;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "security analyzer");
  CLI::App* an_recovery = analyze_cmd->add_subcommand("recovery", "recovery probability");
  an_recovery->add_option("--capacities", an_capacities, "per-type compromise probabilities")
      ->required();
  an_recovery->add_option("--allocation", an_allocations, "fragment counts (repeatable)")
      ->required();
  an_recovery->add_option("--out", an_out);
  CLI::App* an_optimum = analyze_cmd->add_subcommand("optimum", "budget-B adversary optimum");
  an_optimum->add_option("--budget", an_budgets, "budgets (repeatable)");
  an_optimum->add_option("--allocation", an_allocations)->required();
  an_optimum->add_option("--out", an_out);
  CLI::App* an_diversity = analyze_cmd->add_subcommand("diversity", "required diversity");
  an_diversity->add_option("--budget", an_budgets);
  an_diversity->add_option("--n", an_ns, "fragment counts");
  an_diversity->add_option("--epsilon", an_epsilons, "target recovery bounds");
  an_diversity->add_option("--out", an_out);
  CLI::App* an_pool = analyze_cmd->add_subcommand("pool", "routing-pool statistics");
  an_pool->add_option("--pool-size", an_pool_size);
  an_pool->add_option("--surveilled", an_surveilled);
  an_pool->add_option("--q", an_qs, "forward probabilities (repeatable)");
  an_pool->add_option("--max-hops", an_hmax);
  an_pool->add_option("--requests", an_requests, "simulated requests (0 = closed form only)");
  an_pool->add_option("--seed", an_seed);
  an_pool->add_option("--out", an_out);
  CLI::App* an_verify = analyze_cmd->add_subcommand("verify", "oracle agreement suite");
  an_verify->add_option("--out", an_out);

  // bench
  std::string bench_config, bench_out = "records.csv", bench_in, bench_svg = "bench.svg";
  CLI::App* bench_cmd = app.add_subcommand("bench", "latency bench");
  CLI::App* bench_run_cmd = bench_cmd->add_subcommand("run", "run configured trials");
  bench_run_cmd->add_option("--config", bench_config, "JSON config (object or array)")
      ->required();
  bench_run_cmd->add_option("--out", bench_out, "records CSV path");
  CLI::App* bench_plot_cmd = bench_cmd->add_subcommand("plot", "render summary SVG");
  bench_plot_cmd->add_option("--in", bench_in, "records CSV path")->required();
  bench_plot_cmd->add_option("--out", bench_svg, "SVG output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (qkms_serve->parsed()) return run_qkms_serve(qkms_opts);
    if (proxy_serve->parsed()) return run_proxy_serve(proxy_opts);
    if (client_request->parsed()) return run_client_request(client_opts);
    if (kiosk_issue->parsed()) {
      return run_kiosk_issue(kiosk_address, kiosk_validity, kiosk_seed_hex,
                             kiosk_now ? kiosk_now : (int64_t)std::time(nullptr));
    }
    if (kiosk_verify->parsed()) {
      return run_kiosk_verify(kiosk_credential, kiosk_verify_key,
                              kiosk_now ? kiosk_now : (int64_t)std::time(nullptr));
    }
    if (an_recovery->parsed()) return run_analyze_recovery(an_capacities, an_allocations, an_out);
    if (an_optimum->parsed()) return run_analyze_optimum(an_budgets, an_allocations, an_out);
    if (an_diversity->parsed()) return run_analyze_diversity(an_budgets, an_ns, an_epsilons, an_out);
    if (an_pool->parsed()) {
      return run_analyze_pool(an_pool_size, an_surveilled, an_qs, an_hmax, an_requests, an_seed,
                              an_out);
    }
    if (an_verify->parsed()) return run_analyze_verify(an_out);
    if (bench_run_cmd->parsed()) return run_bench_run(bench_config, bench_out);
    if (bench_plot_cmd->parsed()) return run_bench_plot(bench_in, bench_svg);
    std::fprintf(stderr, "missing subcommand; see --help\n");
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
