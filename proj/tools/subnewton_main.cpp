#include "subnewton/errors.hpp"
#include "subnewton/experiment.hpp"
#include "subnewton/io.hpp"
#include "subnewton/sketch.hpp"
#include "subnewton/synthetic.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("SUBNEWTON_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string text(raw);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw subnewton::ArgumentError("SUBNEWTON_SEED must be an unsigned integer, got '" + text + "'");
  }
  return value;
}

int cmd_run(const std::string& config_path) {
  const std::filesystem::path path(config_path);
  subnewton::ExperimentConfig config = subnewton::experiment_config_from_json(
      subnewton::read_text_file(path), path.parent_path());
  if (auto seed = seed_from_env()) config.seed = *seed;
  config.validate();

  subnewton::ExperimentResult result;
  try {
    result = subnewton::run_experiment(config, std::cerr);
  } catch (const subnewton::ParseError&) {
    throw;
  } catch (const subnewton::ArgumentError&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << "subnewton run: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  std::cout << result.summary;
  return result.hard_checks_pass ? kExitOk : kExitCheckFailed;
}

int cmd_gen(const std::string& spec_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed) {
  const subnewton::SyntheticSpec spec =
      subnewton::synthetic_spec_from_json(subnewton::read_text_file(spec_path));
  if (auto env = seed_from_env()) seed = env;
  const subnewton::SyntheticInstance instance = subnewton::generate_synthetic(spec, seed.value_or(0));

  const std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out);
  subnewton::write_text_file(out / "data.libsvm", subnewton::format_libsvm(instance.problem.data));
  subnewton::write_text_file(out / "ground_truth.json", subnewton::to_json(instance.truth) + "\n");
  subnewton::write_text_file(out / "spec.json", subnewton::to_json(spec) + "\n");
  std::cout << "wrote " << instance.problem.n() << " x " << instance.problem.d()
            << " instance to " << out.string() << " (d_eff " << instance.truth.d_eff
            << ", coherence " << instance.truth.coherence << ")\n";
  return kExitOk;
}

struct DiagOptions {
  std::string data;
  double gamma = 0.0;
  std::string format = "libsvm";
  subnewton::Index label_column = 0;
  std::string loss = "quadratic";
  std::string scheme = "uniform";
  subnewton::Index s = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.25;
  double delta = 0.1;
  double constant_c = 4.0;
};

int cmd_diag(const DiagOptions& opt) {
  const subnewton::LossKind loss = subnewton::loss_from_string(opt.loss);
  subnewton::Problem problem;
  if (opt.format == "libsvm") {
    problem.data = subnewton::load_libsvm(opt.data, loss);
  } else if (opt.format == "csv") {
    problem.data = subnewton::load_csv(opt.data, opt.label_column, loss);
  } else {
    throw subnewton::ArgumentError("--format must be libsvm or csv");
  }
  problem.loss = loss;
  problem.gamma = opt.gamma;
  problem.validate();

  const subnewton::Matrix A = subnewton::scaled_row_matrix(problem, subnewton::Vector::Zero(problem.d()));
  const subnewton::SamplingScheme scheme = subnewton::scheme_from_string(opt.scheme);
  subnewton::Index s = opt.s;
  if (s == 0) {
    subnewton::BoundParams bound;
    bound.epsilon = opt.epsilon;
    bound.delta = opt.delta;
    bound.constant_c = opt.constant_c;
    const subnewton::LeverageSummary lev = subnewton::leverage_summary(A, opt.gamma, problem.n());
    s = subnewton::sample_size(bound, lev.d_eff, lev.coherence, scheme, 1, subnewton::BoundFamily::SSN);
  }
  const subnewton::Vector probs = subnewton::sampling_probabilities(A, scheme, opt.gamma);
  const subnewton::Sketch sketch = subnewton::draw_sketch(probs, s, opt.seed, scheme);
  std::cout << subnewton::to_json(subnewton::spectral_report(A, opt.gamma, sketch)) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sub-sampled Newton solvers and sketch diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "Run a seeded experiment from a JSON config");
  run->add_option("--config", config_path, "Experiment config JSON")->required();

  std::string spec_path;
  std::string out_dir;
  std::optional<std::uint64_t> gen_seed;
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic instance");
  gen->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Generator seed (default 0)");

  DiagOptions diag_opt;
  CLI::App* diag = app.add_subcommand("diag", "Print a spectral report for one sketch of a dataset");
  diag->add_option("--data", diag_opt.data, "Dataset path")->required();
  diag->add_option("--gamma", diag_opt.gamma, "Ridge parameter")->required();
  diag->add_option("--format", diag_opt.format, "libsvm or csv");
  diag->add_option("--label-column", diag_opt.label_column, "CSV label column (0-based)");
  diag->add_option("--loss", diag_opt.loss, "quadratic or logistic");
  diag->add_option("--scheme", diag_opt.scheme, "uniform, ridge_leverage or row_norm");
  diag->add_option("--s", diag_opt.s, "Sketch size (default from the sample-size bound)");
  diag->add_option("--seed", diag_opt.seed, "Sketch seed");
  diag->add_option("--epsilon", diag_opt.epsilon, "Target spectral epsilon for the bound");
  diag->add_option("--delta", diag_opt.delta, "Failure probability for the bound");
  diag->add_option("--c", diag_opt.constant_c, "Bound constant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*gen) return cmd_gen(spec_path, out_dir, gen_seed);
    if (*diag) return cmd_diag(diag_opt);
  } catch (const subnewton::ParseError& e) {
    std::cerr << "subnewton: parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const subnewton::ArgumentError& e) {
    std::cerr << "subnewton: " << e.what() << '\n';
    return kExitUsage;
  } catch (const subnewton::IoError& e) {
    std::cerr << "subnewton: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "subnewton: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitUsage;
}
