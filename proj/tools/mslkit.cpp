// mslkit command-line front end: synth, train, eval, project, inspect.
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mslkit/mslkit.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mslkit;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string dims_string(const std::vector<std::size_t>& d) { return detail::shape_string(d); }

// --config FILE holds "key = value" lines (# comments allowed). Each key
// becomes "--key value" appended after the real arguments unless the
// command line already sets it, so flags always win.
std::vector<std::string> expand_config(int argc, char** argv) {
  static const std::set<std::string> kSwitches{"centered", "unit-norm"};
  std::vector<std::string> args(argv, argv + argc);
  std::optional<std::string> file;
  for (std::size_t i = 1; i < args.size();) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file argument");
      file = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  if (!file) return args;

  std::ifstream in(*file);
  if (!in) throw UsageError("cannot read config file " + *file);
  auto given = [&](const std::string& key) {
    for (std::size_t i = 1; i < args.size(); ++i)
      if (args[i] == "--" + key || args[i].rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  auto trim = [](std::string t) {
    const auto b = t.find_first_not_of(" \t");
    const auto e = t.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
  };
  std::vector<std::string> extra;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(*file + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError(*file + ":" + std::to_string(line_no) + ": empty key");
    if (given(key)) continue;
    if (kSwitches.count(key)) {
      if (value == "true" || value == "1" || value == "yes") extra.push_back("--" + key);
      else if (value != "false" && value != "0" && value != "no")
        throw UsageError(*file + ":" + std::to_string(line_no) + ": " + key + " takes true or false");
    } else {
      extra.push_back("--" + key);
      extra.push_back(value);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

struct SynthArgs {
  SyntheticSpec spec;
  std::string out;
};

struct TrainArgs {
  std::string manifest;
  std::string models;
  double energy = 0.96;
  std::string mda_dims = "auto";
  int itr_max = 5;
  double epsilon = 1e-6;
  double gamma = 1e-6;
  std::string method = "howsvd-mda";
  std::string out;
  bool centered = false;
  bool unit_norm = false;
};

struct EvalArgs {
  std::string model;
  std::string manifest;
  std::string report;
};

struct ProjectArgs {
  std::string model;
  std::string manifest;
  std::string out;
};

struct InspectArgs {
  std::string model;
};

int run_synth(const SynthArgs& a) {
  try {
    a.spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  write_synthetic(a.spec, a.out);
  std::cout << "wrote " << a.spec.classes * a.spec.train_per_class() << " train and "
            << a.spec.classes * (a.spec.per_class - a.spec.train_per_class()) << " test samples to " << a.out << "\n";
  return 0;
}

TrainOptions train_options(const TrainArgs& a) {
  TrainOptions o;
  const auto method = parse_method(a.method);
  if (!method) throw UsageError("--method must be one of howsvd-mda, hosvd-mda, lda, raw");
  o.method = *method;
  if (!(a.energy > 0.0 && a.energy <= 1.0)) throw UsageError("--energy must lie in (0, 1]");
  if (a.itr_max < 1) throw UsageError("--itr-max must be >= 1");
  if (!(a.epsilon > 0.0)) throw UsageError("--epsilon must be > 0");
  if (!(a.gamma >= 0.0)) throw UsageError("--gamma must be >= 0");
  o.hosvd.energy = a.energy;
  o.hosvd.centered = a.centered;
  o.mda.itr_max = a.itr_max;
  o.mda.epsilon = a.epsilon;
  o.mda.gamma = a.gamma;
  o.mda.auto_energy = a.energy;
  o.unit_norm = a.unit_norm;
  if (a.mda_dims != "auto") {
    std::vector<std::size_t> dims;
    for (const auto& item : split_csv(a.mda_dims)) {
      std::size_t used = 0;
      long v = 0;
      try {
        v = std::stol(item, &used);
      } catch (...) {
        used = 0;
      }
      if (used != item.size() || v < 1) throw UsageError("--mda-dims must be 'auto' or a list of positive integers");
      dims.push_back(static_cast<std::size_t>(v));
    }
    if (dims.empty()) throw UsageError("--mda-dims must be 'auto' or a list of positive integers");
    o.mda.output_dims = dims;
  }
  return o;
}

std::string stage_summary(const ModeBasis& b) {
  return std::string(stage_name(b.stage)) + "[" + dims_string(b.input_dims) + "->" + dims_string(b.output_dims) + "]";
}

int run_train(const TrainArgs& a) {
  const TrainOptions opts = train_options(a);
  const DatasetManifest manifest = read_manifest(a.manifest);
  AssembleOptions aopts;
  aopts.unit_norm = a.unit_norm;
  const AssembledSet train = assemble(manifest, split_csv(a.models), aopts);
  const TrainedModel model = train_model(train, opts);
  save_model(a.out, model);

  std::cout << "method=" << method_name(model.method);
  for (std::size_t s = 0; s < model.stages.size(); ++s) std::cout << " stage" << s + 1 << "=" << stage_summary(model.stages[s]);
  if (model.mda_report)
    std::cout << " iterations=" << model.mda_report->iterations_used
              << " converged=" << (model.mda_report->converged ? "yes" : "no");
  std::cout << " gallery_width=" << model.gallery.width() << " classes=" << model.gallery.num_classes()
            << " train_samples=" << model.gallery.vectors().rows() << "\n";
  return 0;
}

AssembledSet assemble_for_model(const TrainedModel& model, const std::string& manifest_path) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const auto available = manifest.model_names();
  std::vector<std::string> expected = model.models;
  std::sort(expected.begin(), expected.end());
  if (available != expected) {
    std::string have, want;
    for (const auto& m : available) have += (have.empty() ? "" : ",") + m;
    for (const auto& m : model.models) want += (want.empty() ? "" : ",") + m;
    throw InvalidArgument("dimension chain mismatch at stage 'input': model was trained on " +
                          std::to_string(model.models.size()) + " models (" + want + "), manifest provides " +
                          std::to_string(available.size()) + " (" + have + ")");
  }
  AssembleOptions aopts;
  aopts.unit_norm = model.unit_norm;
  aopts.class_names = model.gallery.class_names();
  aopts.feature_dim = model.feature_dim;
  return assemble(manifest, model.models, aopts);
}

int run_eval(const EvalArgs& a) {
  const TrainedModel model = load_model(a.model);
  const AssembledSet probes = assemble_for_model(model, a.manifest);
  const EvalReport report = evaluate_model(model, probes);
  std::ofstream out(a.report, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + a.report);
  out << format_report(report);
  if (!out) throw std::runtime_error("write failed for " + a.report);
  std::cout << "accuracy=" << std::setprecision(17) << report.accuracy << " n_test=" << report.n_test << "\n";
  return 0;
}

int run_project(const ProjectArgs& a) {
  const TrainedModel model = load_model(a.model);
  const AssembledSet probes = assemble_for_model(model, a.manifest);
  const Matrix vectors = embed_all(model, probes.tensors);
  std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  out << std::setprecision(17) << "sample_id,label";
  for (std::size_t j = 0; j < vectors.cols(); ++j) out << ",v" << j + 1;
  out << "\n";
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    out << probes.sample_ids[i] << ',' << probes.class_names[static_cast<std::size_t>(probes.labels[i] - 1)];
    for (double v : vectors.row(i)) out << ',' << v;
    out << "\n";
  }
  std::cout << "projected " << vectors.rows() << " samples to width " << vectors.cols() << "\n";
  return 0;
}

int run_inspect(const InspectArgs& a) {
  const TrainedModel model = load_model(a.model);
  std::ostringstream os;
  os << std::setprecision(10);
  os << "method: " << method_name(model.method) << "\n";
  os << "energy: " << model.energy << "\n";
  os << "gamma: " << model.gamma << "\n";
  os << "centered: " << (model.centered ? "yes" : "no") << "\n";
  os << "mode_order: feature,model (sample mode is not projected)\n";
  std::string models;
  for (const auto& m : model.models) models += (models.empty() ? "" : ",") + m;
  os << "models: " << models << "\n";
  os << "input: " << dims_string(model.input_shape()) << "\n";
  for (std::size_t s = 0; s < model.stages.size(); ++s) {
    const ModeBasis& b = model.stages[s];
    const std::string key = "stage." + std::to_string(s + 1) + ".";
    os << key << "kind: " << stage_name(b.stage) << "\n";
    os << key << "dims: " << dims_string(b.input_dims) << " -> " << dims_string(b.output_dims) << "\n";
    for (std::size_t k = 0; k < b.order() && k < b.spectra.size(); ++k) {
      const auto& sp = b.spectra[k];
      double total = 0.0, kept = 0.0;
      for (std::size_t i = 0; i < sp.size(); ++i) {
        const double v = std::max(sp[i], 0.0);
        total += v;
        if (i < b.output_dims[k]) kept += v;
      }
      os << key << "mode." << k + 1 << ".kept: " << b.output_dims[k] << " of " << sp.size() << "\n";
      if (total > 0.0) os << key << "mode." << k + 1 << ".kept_energy: " << kept / total << "\n";
      os << key << "mode." << k + 1 << ".top_eigenvalues:";
      for (std::size_t i = 0; i < std::min<std::size_t>(5, sp.size()); ++i) os << ' ' << sp[i];
      os << "\n";
    }
  }
  if (model.mda_report) {
    const MdaReport& r = *model.mda_report;
    os << "mda.iterations_used: " << r.iterations_used << "\n";
    os << "mda.converged: " << (r.converged ? "yes" : "no") << "\n";
    os << std::setprecision(17);
    for (std::size_t k = 0; k < r.final_deltas.size(); ++k) {
      os << "mda.mode." << k + 1 << ".delta: " << r.final_deltas[k] << "\n";
      os << "mda.mode." << k + 1 << ".threshold: " << r.thresholds[k] << "\n";
    }
    for (std::size_t k = 0; k < r.objective.size(); ++k)
      os << "mda.mode." << k + 1 << ".trace_ratio: " << r.objective[k] << "\n";
  }
  os << "gallery: " << model.gallery.vectors().rows() << " x " << model.gallery.width() << ", "
     << model.gallery.num_classes() << " classes\n";
  std::cout << os.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mslkit: multilinear subspace learning (HOWSVD-MDA) toolkit"};
  app.require_subcommand(1);
  app.footer("Any command also accepts --config FILE with key=value lines (flags override them).");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic train/test dataset");
  c_synth->add_option("--classes", synth.spec.classes, "number of classes")->capture_default_str();
  c_synth->add_option("--per-class", synth.spec.per_class, "samples per class")->capture_default_str();
  c_synth->add_option("--dim", synth.spec.dim, "feature dimension")->capture_default_str();
  c_synth->add_option("--models", synth.spec.models, "number of feature models")->capture_default_str();
  c_synth->add_option("--delta", synth.spec.delta, "class-mean separation")->capture_default_str();
  c_synth->add_option("--sigma", synth.spec.sigma, "noise standard deviation")->capture_default_str();
  c_synth->add_option("--seed", synth.spec.seed, "generator seed")->capture_default_str();
  c_synth->add_option("--noise-corr", synth.spec.noise_correlation, "noise share correlated across models")
      ->capture_default_str();
  c_synth->add_option("--out", synth.out, "output directory")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "fit a model and build its gallery");
  c_train->add_option("--manifest", train.manifest, "training manifest")->required();
  c_train->add_option("--models", train.models, "comma-separated model names (default: all)");
  c_train->add_option("--energy", train.energy, "eigenvalue energy fraction kept")->capture_default_str();
  c_train->add_option("--mda-dims", train.mda_dims, "per-mode MDA output dims or 'auto'")->capture_default_str();
  c_train->add_option("--itr-max", train.itr_max, "maximum MDA iterations")->capture_default_str();
  c_train->add_option("--epsilon", train.epsilon, "MDA stop tolerance")->capture_default_str();
  c_train->add_option("--gamma", train.gamma, "within-class scatter regularizer")->capture_default_str();
  c_train->add_option("--method", train.method, "howsvd-mda | hosvd-mda | lda | raw")->capture_default_str();
  c_train->add_option("--out", train.out, "model file to write")->required();
  c_train->add_flag("--centered", train.centered, "mean-center before mode covariances");
  c_train->add_flag("--unit-norm", train.unit_norm, "unit-normalize each feature vector");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "classify a manifest and write a report");
  c_eval->add_option("--model", eval.model, "model file")->required();
  c_eval->add_option("--manifest", eval.manifest, "probe manifest")->required();
  c_eval->add_option("--report", eval.report, "report file to write")->required();

  ProjectArgs proj;
  auto* c_project = app.add_subcommand("project", "write projected feature vectors as CSV");
  c_project->add_option("--model", proj.model, "model file")->required();
  c_project->add_option("--manifest", proj.manifest, "manifest to project")->required();
  c_project->add_option("--out", proj.out, "CSV file to write")->required();

  InspectArgs inspect;
  auto* c_inspect = app.add_subcommand("inspect", "print model dimensions and fit diagnostics");
  c_inspect->add_option("--model", inspect.model, "model file")->required();

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*c_synth) return run_synth(synth);
    if (*c_train) return run_train(train);
    if (*c_eval) return run_eval(eval);
    if (*c_project) return run_project(proj);
    if (*c_inspect) return run_inspect(inspect);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
