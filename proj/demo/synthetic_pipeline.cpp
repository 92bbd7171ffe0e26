// End-to-end use of the library API on in-memory synthetic data:
// generate, fit HOWSVD-MDA, build a gallery, classify the held-out split.

#include <iostream>

#include "mslkit/mslkit.hpp"

int main() {
  using namespace mslkit;

  SyntheticSpec spec;
  spec.classes = 4;
  spec.per_class = 50;
  spec.dim = 32;
  spec.models = 3;
  spec.delta = 4.0;
  spec.sigma = 1.0;
  spec.seed = 7;
  const SyntheticData data = generate_synthetic(spec);

  AssembledSet train;
  train.tensors = data.train;
  train.labels = data.train_labels;
  train.sample_ids = data.train_ids;
  train.class_names = data.class_names;
  train.models = data.model_names;
  train.feature_dim = spec.dim;
  train.model_dims.assign(spec.models, spec.dim);

  TrainOptions opts;  // howsvd-mda, 96% energy, itr_max 5
  const TrainedModel model = train_model(train, opts);
  for (const ModeBasis& stage : model.stages) {
    std::cout << stage_name(stage.stage) << ":";
    for (std::size_t k = 0; k < stage.order(); ++k)
      std::cout << "  mode " << k + 1 << " " << stage.input_dims[k] << " -> " << stage.output_dims[k];
    std::cout << "\n";
  }
  std::cout << "mda iterations: " << model.mda_report->iterations_used
            << (model.mda_report->converged ? " (converged)" : "") << "\n";

  AssembledSet test = train;
  test.tensors = data.test;
  test.labels = data.test_labels;
  test.sample_ids = data.test_ids;
  const EvalReport report = evaluate_model(model, test);
  std::cout << "test accuracy: " << report.accuracy << " over " << report.n_test << " probes\n";
  std::cout << "micro AUC: " << report.micro_auc << "\n";
  return 0;
}
