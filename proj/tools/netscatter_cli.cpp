// Command-line front end: runs the named experiment deterministically and
// writes one CSV table per invocation. See README for the config file format.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netscatter/experiments.hpp"
#include "netscatter/mac.hpp"

namespace {

using netscatter::format_number;

struct ConfigEntry {
  int line;
  std::string key;
  std::string value;
};

// Flat sectioned text: [section] headers, key = value pairs, '#' comments.
std::map<std::string, std::vector<ConfigEntry>> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::vector<ConfigEntry>> sections;
  std::string section, raw;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      sections.try_emplace(section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key = value");
    if (section.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": key outside any [section]");
    sections[section].push_back({line_no, trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
  }
  return sections;
}

// Applies one section of the config file as defaults: every key must name an
// option of the subcommand, and command-line flags keep precedence.
void apply_config_section(CLI::App* sub, const std::string& path,
                          const std::vector<ConfigEntry>& entries) {
  for (const auto& entry : entries) {
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + entry.key);
    } catch (const CLI::OptionNotFound&) {
      throw std::runtime_error(path + ":" + std::to_string(entry.line) + ": unknown key '" +
                               entry.key + "' for experiment " + sub->get_name());
    }
    if (opt->count() > 0) continue;  // flag given on the command line wins
    std::stringstream values(entry.value);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(values, tok, ','))
      if (!tok.empty()) toks.push_back(tok);
    opt->clear();
    for (const auto& t : toks) opt->add_result(t);
    if (!opt->get_callback_run()) opt->run_callback();
  }
}

void emit(const std::vector<netscatter::ExperimentRecord>& records,
          const std::string& out_path) {
  if (out_path.empty()) {
    netscatter::write_csv(std::cout, records);
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  netscatter::write_csv(out, records);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netscatter: distributed chirp-spread-spectrum backscatter simulator"};
  app.require_subcommand(1);
  app.fallthrough();  // --seed/--out/--config may follow the subcommand

  std::string config_path, out_path;
  std::uint64_t seed = 1;
  app.add_option("--config", config_path, "config file (sections per experiment)");
  app.add_option("--out", out_path, "output CSV path (default: stdout)");
  auto* seed_opt = app.add_option("--seed", seed, "master random seed");

  netscatter::ChirpConfig cfg;
  auto add_chirp_opts = [&cfg](CLI::App* sub) {
    sub->add_option("--sf", cfg.sf, "spreading factor");
    sub->add_option("--bw", cfg.bw, "chirp bandwidth [Hz]");
    sub->add_option("--pad", cfg.pad_factor, "FFT zero-padding factor");
  };

  netscatter::NearFarParams nf;
  auto* nearfar = app.add_subcommand("nearfar", "two-device near-far BER sweep");
  nearfar->add_option("--bin-a", nf.bin_a, "weak device FFT bin");
  nearfar->add_option("--bin-b", nf.bin_b, "strong device FFT bin");
  nearfar->add_option("--diff", nf.power_diff_db, "power differences [dB]")->delimiter(',');
  nearfar->add_option("--sigma", nf.freq_sigma_hz, "frequency mismatch sigma [Hz]");
  nearfar->add_option("--symbols", nf.n_symbols, "symbols per point");
  nearfar->add_option("--snr", nf.weak_snr_db, "weak device SNR [dB]");
  add_chirp_opts(nearfar);

  netscatter::DynamicRangeParams dr;
  auto* dynrange = app.add_subcommand("dynrange", "tolerated power difference vs separation");
  dynrange->add_option("--fixed-bin", dr.fixed_bin, "weak device FFT bin");
  dynrange->add_option("--sep", dr.separations, "bin separations")->delimiter(',');
  dynrange->add_option("--snr", dr.snr_db, "weak device SNR [dB]");
  dynrange->add_option("--packets", dr.n_packets, "packets per step");
  dynrange->add_option("--step", dr.step_db, "deficit step [dB]");
  add_chirp_opts(dynrange);

  netscatter::FftVariationParams fv;
  double fv_jitter_lo = 0.0, fv_jitter_hi = 2e-6;
  auto* fftvar = app.add_subcommand("fftvar", "FFT bin displacement vs timing jitter");
  fftvar->add_option("--bw-list", fv.bw_list, "bandwidths [Hz]")->delimiter(',');
  fftvar->add_option("--sf", fv.sf, "spreading factor");
  fftvar->add_option("--pad", fv.pad_factor, "FFT zero-padding factor");
  fftvar->add_option("--jitter-lo", fv_jitter_lo, "uniform jitter lower bound [s]");
  fftvar->add_option("--jitter-hi", fv_jitter_hi, "uniform jitter upper bound [s]");
  fftvar->add_option("--packets", fv.n_packets, "packets per bandwidth");
  fftvar->add_option("--snr", fv.snr_db, "SNR [dB]");

  netscatter::NetworkParams net;
  std::string net_scheme = "netscatter_cfg1";
  double net_uniform_snr = -1e9;
  auto* network = app.add_subcommand("network", "rate and latency against LoRa baselines");
  network->add_option("--devices", net.n_devices_list, "device counts")->delimiter(',');
  network->add_option("--scheme", net_scheme,
                      "netscatter_cfg1|netscatter_cfg2|lora_fixed|lora_ideal_rate");
  network->add_option("--rounds", net.n_rounds, "simulated query rounds");
  network->add_option("--snr-lo", net.snr_lo_db, "deployment SNR lower bound [dB]");
  network->add_option("--snr-hi", net.snr_hi_db, "deployment SNR upper bound [dB]");
  network->add_option("--uniform-snr", net_uniform_snr, "give every device this SNR [dB]");
  network->add_option("--skip", net.skip, "cyclic shift spacing");
  add_chirp_opts(network);

  netscatter::BerSnrParams bs;
  auto* bersnr = app.add_subcommand("bersnr", "per-device BER vs SNR");
  bersnr->add_option("--snr", bs.snr_list, "SNR list [dB]")->delimiter(',');
  bersnr->add_option("--devices", bs.n_devices, "concurrent devices");
  bersnr->add_option("--symbols", bs.n_symbols, "symbols per SNR point");
  bersnr->add_option("--skip", bs.skip, "cyclic shift spacing");
  add_chirp_opts(bersnr);

  bool an_collision = false, an_choir = false, an_rate = false, an_capacity = false;
  int an_n = 10;
  double an_snr_db = -20.0;
  auto* analytic = app.add_subcommand("analytic", "closed-form tables");
  analytic->add_flag("--collision", an_collision, "LoRa random-choice collision probability");
  analytic->add_flag("--choir", an_choir, "Choir fraction-distinctness probability");
  analytic->add_flag("--rate", an_rate, "per-device and aggregate bitrates");
  analytic->add_flag("--capacity", an_capacity, "multi-user Shannon capacity");
  analytic->add_option("--n", an_n, "number of devices");
  analytic->add_option("--snr", an_snr_db, "per-device SNR [dB] for capacity");
  add_chirp_opts(analytic);

  try {
    app.parse(argc, argv);
    if (!config_path.empty()) {
      const auto sections = parse_config_file(config_path);
      for (const auto& [name, entries] : sections) {
        CLI::App* sub = nullptr;
        try {
          sub = app.get_subcommand(name);
        } catch (const CLI::OptionNotFound&) {
          throw std::runtime_error(config_path + ": unknown experiment section [" + name + "]");
        }
        apply_config_section(sub, config_path, entries);
      }
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  if (seed_opt->count() == 0) {
    if (const char* env = std::getenv("NETSCATTER_SEED")) {
      try {
        seed = std::stoull(env);
      } catch (const std::exception&) {
        std::cerr << "config error: NETSCATTER_SEED is not an integer\n";
        return 1;
      }
    }
  }

  try {
    std::vector<netscatter::ExperimentRecord> records;
    if (*nearfar) {
      nf.cfg = cfg;
      records = netscatter::run_near_far(nf, seed);
    } else if (*dynrange) {
      dr.cfg = cfg;
      records = netscatter::run_dynamic_range_sweep(dr, seed);
    } else if (*fftvar) {
      fv.jitter = fv_jitter_lo == fv_jitter_hi && fv_jitter_lo == 0.0
                      ? netscatter::JitterSpec::none()
                      : netscatter::JitterSpec::uniform(fv_jitter_lo, fv_jitter_hi);
      records = netscatter::run_fft_variation(fv, seed);
    } else if (*network) {
      net.cfg = cfg;
      const auto scheme = netscatter::scheme_from_name(net_scheme);
      if (!scheme) {
        std::cerr << "config error: unknown scheme '" << net_scheme << "'\n";
        return 1;
      }
      net.scheme = *scheme;
      if (net_uniform_snr > -1e8) net.uniform_snr_db = net_uniform_snr;
      records = netscatter::run_network(net, seed);
    } else if (*bersnr) {
      bs.cfg = cfg;
      records = netscatter::run_ber_snr(bs, seed);
    } else if (*analytic) {
      const bool all = !an_collision && !an_choir && !an_rate && !an_capacity;
      if (an_collision || all) {
        const auto cp = netscatter::collision_probability(an_n, cfg.sf);
        std::printf("collision n=%d sf=%d exact=%.3f approx=%.3f\n", an_n, cfg.sf, cp.exact,
                    cp.approx);
      }
      if (an_choir || all) {
        std::printf("choir n=%d fraction_distinct=%.4f\n", an_n,
                    netscatter::choir_fraction_probability(an_n));
      }
      if (an_rate || all) {
        const auto rm = netscatter::rate_model(cfg);
        std::printf("rate sf=%d bw=%s lora=%s device=%s aggregate=%s gain=%.1f\n", cfg.sf,
                    format_number(cfg.bw).c_str(), format_number(rm.lora_bitrate_bps).c_str(),
                    format_number(rm.device_bitrate_bps).c_str(),
                    format_number(rm.aggregate_rate_bps).c_str(), rm.gain);
      }
      if (an_capacity || all) {
        const double snr_lin = std::pow(10.0, an_snr_db / 10.0);
        const auto cap = netscatter::multiuser_capacity(an_n, snr_lin, cfg.bw);
        std::printf("capacity n=%d snr_db=%s exact=%s low_snr_approx=%s\n", an_n,
                    format_number(an_snr_db).c_str(), format_number(cap.exact_bps).c_str(),
                    format_number(cap.low_snr_approx_bps).c_str());
      }
      return 0;
    }
    emit(records, out_path);
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
