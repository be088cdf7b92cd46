// sparse-bandit: run, validate, generate-hard, sweep.
//
// Exit codes: 0 ok, 1 config or parse error, 2 guard violation,
// 3 invariant failure (including a guaranteed bound that did not hold).

#include "sparse_bandit/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

namespace sb = sparse_bandit;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kGuardError = 2;
constexpr int kInvariantError = 3;

// Guaranteed bounds (the two elimination algorithms) count as invariants; the
// calibrated ones are reported but do not change the exit status.
bool guaranteed(const sb::RunRecord& r) { return r.algorithm == "param-elim" || r.algorithm == "design-elim"; }

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << contents;
}

int finish_run(const std::vector<sb::RunRecord>& records, const std::string& output) {
  std::ostringstream csv;
  sb::write_csv(csv, records);
  write_file(output, csv.str());
  std::size_t missed = 0;
  bool hard_miss = false;
  for (const auto& r : records) {
    if (!r.bound_satisfied) {
      ++missed;
      hard_miss = hard_miss || guaranteed(r);
    }
  }
  std::cout << records.size() << " run(s) written to " << output << ", " << missed << " outside the bound\n";
  if (hard_miss) {
    std::cerr << "error: a guaranteed bound was violated\n";
    return kInvariantError;
  }
  return kOk;
}

int cmd_run(const std::string& config_path) {
  const auto cfg = sb::load_config(config_path);
  return finish_run(sb::run_experiment(cfg), cfg.output);
}

int cmd_sweep(const std::string& config_path) {
  const auto cfg = sb::load_config(config_path);
  const auto records = sb::run_experiment(cfg);
  const int status = finish_run(records, cfg.output);
  const auto groups = sb::summarize(records);
  std::ostringstream summary;
  sb::write_summary_csv(summary, groups);
  const std::string path = cfg.summary.value_or(cfg.output + ".summary.csv");
  write_file(path, summary.str());
  std::cout << summary.str();
  std::cout << "summary written to " << path << "\n";
  return status;
}

int cmd_validate(const std::string& path) {
  const auto rep = sb::validate_instance_file(path);
  for (const auto& f : rep.failures) std::cout << "FAIL " << f.invariant << ": " << f.detail << "\n";
  if (!rep.ok()) return kInvariantError;
  std::cout << "ok";
  if (rep.pairs_checked > 0) std::cout << " (" << rep.pairs_checked << " pairs checked)";
  std::cout << "\n";
  return kOk;
}

int cmd_generate_hard(const std::string& spec_path, const std::string& out_path) {
  std::ifstream in(spec_path);
  if (!in) throw sb::ParseError(0, "cannot open '" + spec_path + "'");
  const auto req = sb::parse_hard_request(in);
  const auto inst = sb::generate_hard_instance(req);
  sb::save_instance(out_path, inst);
  std::cout << "wrote k=" << inst.k() << " d=" << inst.d() << " s=" << inst.s() << " to " << out_path << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse linear bandit experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string instance_path;
  std::string spec_path;
  std::string out_path;

  auto* run = app.add_subcommand("run", "run every grid point of a config and write the CSV");
  run->add_option("config", config_path, "config file")->required();
  auto* sweep = app.add_subcommand("sweep", "run a config and also write a per-group summary");
  sweep->add_option("config", config_path, "config file")->required();
  auto* validate = app.add_subcommand("validate", "re-check every invariant of an instance file");
  validate->add_option("instance-file", instance_path, "instance file")->required();
  auto* gen = app.add_subcommand("generate-hard", "generate a certified lower-bound instance");
  gen->add_option("spec", spec_path, "hard-instance spec file")->required();
  gen->add_option("out", out_path, "output instance file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*sweep) return cmd_sweep(config_path);
    if (*validate) return cmd_validate(instance_path);
    if (*gen) return cmd_generate_hard(spec_path, out_path);
  } catch (const sb::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const sb::GuardError& e) {
    std::cerr << "guard violation: " << e.what() << "\n";
    return kGuardError;
  } catch (const sb::Error& e) {
    std::cerr << "invariant failure: " << e.what() << "\n";
    return kInvariantError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
