// vdc — grid-based vine copula engine, command-line front end.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vdc/commands.hpp"
#include "vdc/errors.hpp"

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw vdc::DataError("cannot open " + path);
  json j;
  f >> j;
  return j;
}

struct GlobalOpts {
  std::uint64_t seed = 1;
  vdc::CommandOptions cmd;
};

void print_summary(const vdc::RunRecord& rec) {
  std::cout << rec.command << ":";
  for (const auto& [k, v] : rec.metrics) std::cout << " " << k << "=" << v;
  std::cout << "\n";
  for (const auto& p : rec.artifact_paths) std::cout << "  wrote " << p << "\n";
  for (const auto& n : rec.notes) std::cout << "  note: " << n << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vdc — grid-based vine copula engine"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "root random seed")->capture_default_str();
  app.add_option("--threads", g.cmd.threads, "worker threads")->capture_default_str();
  app.add_option("--out-dir", g.cmd.out_dir, "output directory")->capture_default_str();
  app.add_option("--format", g.cmd.format, "artifact format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  json cfg = json::object();

  // zoo-gen
  auto* zoo = app.add_subcommand("zoo-gen", "sample a synthetic copula to CSV");
  std::string zoo_spec, zoo_spec_file, zoo_out = "samples.csv";
  long long zoo_n = 1000;
  zoo->add_option("--spec", zoo_spec, "inline spec JSON");
  zoo->add_option("--spec-file", zoo_spec_file, "spec JSON file");
  zoo->add_option("--n", zoo_n, "sample count")->capture_default_str();
  zoo->add_option("--out", zoo_out, "output CSV")->capture_default_str();

  // fit
  auto* fitc = app.add_subcommand("fit", "fit a vine model from CSV data");
  std::string fit_input, fit_out = "model.vdc", fit_structure = "dvine";
  std::string fit_estimator = "shrink", fit_grid_dir;
  int fit_m = 64, fit_k = 15, fit_trunc = 0;
  bool fit_no_header = false, fit_const_lookup = false;
  long long fit_min_samples = 100;
  double fit_alpha_v = -1.0, fit_bw_v = -1.0;
  fitc->add_option("--input", fit_input, "input CSV")->required();
  fitc->add_flag("--no-header", fit_no_header, "input has no header row");
  fitc->add_option("--structure", fit_structure, "dvine|rvine")->capture_default_str();
  fitc->add_option("--m", fit_m, "grid size")->capture_default_str();
  fitc->add_option("--k-ipfp", fit_k, "IPFP iterations")->capture_default_str();
  fitc->add_option("--edge-estimator", fit_estimator, "hist|shrink|kde|import")
      ->capture_default_str();
  fitc->add_option("--alpha", fit_alpha_v, "shrinkage weight");
  fitc->add_option("--bandwidth", fit_bw_v, "KDE bandwidth in cells");
  fitc->add_option("--grid-dir", fit_grid_dir, "imported grid directory");
  fitc->add_option("--min-samples", fit_min_samples)->capture_default_str();
  fitc->add_option("--max-tree-level", fit_trunc, "truncation level (0 = off)")
      ->capture_default_str();
  fitc->add_flag("--const-lookup", fit_const_lookup,
                 "piecewise-constant log-density lookup");
  fitc->add_option("--out", fit_out, "model output path")->capture_default_str();

  // loglik
  auto* llc = app.add_subcommand("loglik", "held-out log-likelihood of a model");
  std::string ll_model, ll_input;
  bool ll_no_header = false, ll_no_pit = false;
  llc->add_option("--model", ll_model)->required();
  llc->add_option("--input", ll_input)->required();
  llc->add_flag("--no-header", ll_no_header);
  llc->add_flag("--no-pit", ll_no_pit, "input is already copula-space");

  // sample
  auto* smp = app.add_subcommand("sample", "draw from a fitted model");
  std::string smp_model, smp_out = "model_samples.csv";
  long long smp_n = 1000;
  smp->add_option("--model", smp_model)->required();
  smp->add_option("--n", smp_n)->capture_default_str();
  smp->add_option("--out", smp_out)->capture_default_str();

  // mi
  auto* mic = app.add_subcommand("mi", "pairwise mutual information");
  std::string mi_input, mi_method = "grid", mi_estimator = "shrink";
  bool mi_no_header = false;
  int mi_cx = 0, mi_cy = 1, mi_m = 64, mi_k_ipfp = 15, mi_k = 5;
  mic->add_option("--input", mi_input)->required();
  mic->add_flag("--no-header", mi_no_header);
  mic->add_option("--col-x", mi_cx)->capture_default_str();
  mic->add_option("--col-y", mi_cy)->capture_default_str();
  mic->add_option("--method", mi_method, "grid|ksg|gaussian")->capture_default_str();
  mic->add_option("--m", mi_m)->capture_default_str();
  mic->add_option("--k-ipfp", mi_k_ipfp)->capture_default_str();
  mic->add_option("--edge-estimator", mi_estimator)->capture_default_str();
  mic->add_option("--k", mi_k, "KSG neighbours")->capture_default_str();

  // tc
  auto* tcc = app.add_subcommand("tc", "total correlation of held-out data");
  std::string tc_model, tc_input;
  bool tc_no_header = false, tc_no_pit = false;
  tcc->add_option("--model", tc_model)->required();
  tcc->add_option("--input", tc_input)->required();
  tcc->add_flag("--no-header", tc_no_header);
  tcc->add_flag("--no-pit", tc_no_pit);

  // tc-scaling
  auto* tcs = app.add_subcommand("tc-scaling", "TC estimation across dimensions");
  std::vector<int> tcs_dlist{5, 10, 20};
  double tcs_rho = 0.7;
  long long tcs_n = 20000, tcs_ksg_sub = 4000;
  std::string tcs_estimator = "kde";
  int tcs_m = 64, tcs_k = 15;
  tcs->add_option("--d-list", tcs_dlist, "dimensions")->capture_default_str();
  tcs->add_option("--rho", tcs_rho)->capture_default_str();
  tcs->add_option("--n", tcs_n)->capture_default_str();
  tcs->add_option("--m", tcs_m)->capture_default_str();
  tcs->add_option("--k-ipfp", tcs_k)->capture_default_str();
  tcs->add_option("--edge-estimator", tcs_estimator)->capture_default_str();
  tcs->add_option("--ksg-subsample", tcs_ksg_sub)->capture_default_str();

  // bench-bivariate
  auto* bb = app.add_subcommand("bench-bivariate", "bivariate estimator benchmark");
  std::string bb_suite_file;
  std::vector<std::string> bb_methods{"hist", "shrink", "kde"};
  long long bb_n = 2000;
  int bb_m = 64, bb_k = 15, bb_repeats = 1;
  bb->add_option("--suite-file", bb_suite_file, "JSON array of specs (default suite otherwise)");
  bb->add_option("--methods", bb_methods)->capture_default_str();
  bb->add_option("--n", bb_n)->capture_default_str();
  bb->add_option("--m", bb_m)->capture_default_str();
  bb->add_option("--k-ipfp", bb_k)->capture_default_str();
  bb->add_option("--repeats", bb_repeats)->capture_default_str();

  // ipfp-ablation
  auto* ipab = app.add_subcommand("ipfp-ablation", "IPFP iteration sweep");
  std::vector<int> ip_klist{0, 1, 2, 5, 10, 15, 20, 30, 50, 100};
  long long ip_n = 10000;
  int ip_m = 64;
  std::string ip_estimator = "shrink";
  ipab->add_option("--k-list", ip_klist)->capture_default_str();
  ipab->add_option("--n", ip_n)->capture_default_str();
  ipab->add_option("--m", ip_m)->capture_default_str();
  ipab->add_option("--edge-estimator", ip_estimator)->capture_default_str();

  // self-consistency
  auto* sc = app.add_subcommand("self-consistency", "DPI/additivity/monotonicity suite");
  std::string sc_estimator = "grid", sc_edge = "kde";
  int sc_trials = 30, sc_m = 64, sc_k_ipfp = 15, sc_ksg_k = 5;
  long long sc_n = 10000;
  sc->add_option("--estimator", sc_estimator, "grid|ksg")->capture_default_str();
  sc->add_option("--trials", sc_trials)->capture_default_str();
  sc->add_option("--n", sc_n)->capture_default_str();
  sc->add_option("--m", sc_m)->capture_default_str();
  sc->add_option("--k-ipfp", sc_k_ipfp)->capture_default_str();
  sc->add_option("--edge-estimator", sc_edge)->capture_default_str();
  sc->add_option("--ksg-k", sc_ksg_k)->capture_default_str();

  // model-inspect
  auto* mins = app.add_subcommand("model-inspect", "structure and validity report");
  std::string mins_model;
  mins->add_option("--model", mins_model)->required();

  // rerun
  auto* rr = app.add_subcommand("rerun", "re-execute a run record and compare metrics");
  std::string rr_record;
  rr->add_option("--record", rr_record, "run record JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    vdc::RunRecord rec;
    if (zoo->parsed()) {
      if (!zoo_spec_file.empty())
        cfg["spec"] = load_json_file(zoo_spec_file);
      else if (!zoo_spec.empty())
        cfg["spec"] = json::parse(zoo_spec);
      else
        throw CLI::ValidationError("zoo-gen", "need --spec or --spec-file");
      cfg["n"] = zoo_n;
      cfg["out"] = zoo_out;
      rec = vdc::cmd_zoo_gen(cfg, g.seed, g.cmd);
    } else if (fitc->parsed()) {
      cfg["input"] = fit_input;
      cfg["has_header"] = !fit_no_header;
      cfg["structure"] = fit_structure;
      cfg["m"] = fit_m;
      cfg["k_ipfp"] = fit_k;
      json est{{"kind", fit_estimator}};
      if (fitc->count("--alpha")) est["alpha"] = fit_alpha_v;
      if (fitc->count("--bandwidth")) est["bandwidth"] = fit_bw_v;
      if (!fit_grid_dir.empty()) est["grid_dir"] = fit_grid_dir;
      cfg["estimator"] = est;
      cfg["min_samples"] = fit_min_samples;
      cfg["max_tree_level"] = fit_trunc;
      cfg["const_lookup"] = fit_const_lookup;
      cfg["out"] = fit_out;
      rec = vdc::cmd_fit(cfg, g.seed, g.cmd);
    } else if (llc->parsed()) {
      cfg["model"] = ll_model;
      cfg["input"] = ll_input;
      cfg["has_header"] = !ll_no_header;
      cfg["pit"] = !ll_no_pit;
      rec = vdc::cmd_loglik(cfg, g.seed, g.cmd);
    } else if (smp->parsed()) {
      cfg["model"] = smp_model;
      cfg["n"] = smp_n;
      cfg["out"] = smp_out;
      rec = vdc::cmd_sample(cfg, g.seed, g.cmd);
    } else if (mic->parsed()) {
      cfg["input"] = mi_input;
      cfg["has_header"] = !mi_no_header;
      cfg["col_x"] = mi_cx;
      cfg["col_y"] = mi_cy;
      cfg["method"] = mi_method;
      cfg["m"] = mi_m;
      cfg["k_ipfp"] = mi_k_ipfp;
      cfg["estimator"] = json{{"kind", mi_estimator}};
      cfg["k"] = mi_k;
      rec = vdc::cmd_mi(cfg, g.seed, g.cmd);
    } else if (tcc->parsed()) {
      cfg["model"] = tc_model;
      cfg["input"] = tc_input;
      cfg["has_header"] = !tc_no_header;
      cfg["pit"] = !tc_no_pit;
      rec = vdc::cmd_tc(cfg, g.seed, g.cmd);
    } else if (tcs->parsed()) {
      cfg["d_list"] = tcs_dlist;
      cfg["rho"] = tcs_rho;
      cfg["n"] = tcs_n;
      cfg["m"] = tcs_m;
      cfg["k_ipfp"] = tcs_k;
      cfg["estimator"] = json{{"kind", tcs_estimator}};
      cfg["ksg_subsample"] = tcs_ksg_sub;
      rec = vdc::cmd_tc_scaling(cfg, g.seed, g.cmd);
    } else if (bb->parsed()) {
      if (!bb_suite_file.empty()) cfg["suite"] = load_json_file(bb_suite_file);
      cfg["methods"] = bb_methods;
      cfg["n"] = bb_n;
      cfg["m"] = bb_m;
      cfg["k_ipfp"] = bb_k;
      cfg["repeats"] = bb_repeats;
      rec = vdc::cmd_bench_bivariate(cfg, g.seed, g.cmd);
    } else if (ipab->parsed()) {
      cfg["k_list"] = ip_klist;
      cfg["n"] = ip_n;
      cfg["m"] = ip_m;
      cfg["estimator"] = json{{"kind", ip_estimator}};
      rec = vdc::cmd_ipfp_ablation(cfg, g.seed, g.cmd);
    } else if (sc->parsed()) {
      cfg["estimator"] = sc_estimator;
      cfg["trials"] = sc_trials;
      cfg["n"] = sc_n;
      cfg["m"] = sc_m;
      cfg["k_ipfp"] = sc_k_ipfp;
      cfg["estimator_config"] = json{{"kind", sc_edge}};
      cfg["ksg_k"] = sc_ksg_k;
      rec = vdc::cmd_self_consistency(cfg, g.seed, g.cmd);
    } else if (mins->parsed()) {
      cfg["model"] = mins_model;
      rec = vdc::cmd_model_inspect(cfg, g.seed, g.cmd);
    } else if (rr->parsed()) {
      vdc::RunRecord original = vdc::RunRecord::from_json(load_json_file(rr_record));
      vdc::RunRecord redo = vdc::rerun_from_record(original, g.cmd);
      bool identical = original.metrics == redo.metrics;
      std::cout << "rerun " << original.command << ": metrics "
                << (identical ? "identical" : "DIFFER") << "\n";
      if (!identical) {
        for (const auto& [k, v] : original.metrics) {
          auto it = redo.metrics.find(k);
          if (it == redo.metrics.end() || it->second != v)
            std::cout << "  " << k << ": " << v << " vs "
                      << (it == redo.metrics.end() ? std::nan("") : it->second)
                      << "\n";
        }
        return 4;
      }
      vdc::write_record(redo, g.cmd);
      return 0;
    }
    vdc::write_record(rec, g.cmd);
    print_summary(rec);
    return 0;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const vdc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const vdc::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
