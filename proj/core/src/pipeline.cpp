#include "graft/pipeline.hpp"

#include <stdexcept>

namespace graft {

ExemplarSet select_exemplars(const Matrix& embeddings, const Matrix& probabilities, const Dataset& dataset, int class_id,
                             const ExplainSettings& settings) {
  const auto nodes = dataset.class_nodes(class_id);
  switch (settings.selection) {
    case SelectionMode::FPS:
      return fps_select(embeddings, nodes, settings.exemplars, class_id);
    case SelectionMode::CS_FPS: {
      std::vector<double> confidences;
      confidences.reserve(nodes.size());
      for (Index v : nodes) confidences.push_back(probabilities(v, class_id));
      return cs_fps_select(embeddings, nodes, confidences, settings.exemplars, class_id);
    }
    case SelectionMode::RANDOM:
      return random_select(nodes, settings.exemplars, settings.selection_seed + static_cast<std::uint64_t>(class_id),
                           class_id);
  }
  throw std::logic_error("unhandled selection mode");
}

AttributionVector attribute(const DifferentiableClassifier& model, const FeatureMatrix& features, Index node,
                            int class_id, const ExplainSettings& settings) {
  if (settings.method == AttributionMethod::GRAD_X_INPUT) return grad_times_input(model, features, node, class_id);
  return integrated_gradients(model, features, node, class_id, settings.steps, settings.quadrature);
}

ClassProfile profile_from_exemplars(const DifferentiableClassifier& model, const Dataset& dataset,
                                    const ExemplarSet& exemplars, const Matrix& probabilities,
                                    const ExplainSettings& settings) {
  std::vector<AttributionVector> attributions;
  std::vector<double> confidences;
  for (Index node : exemplars.nodes) {
    attributions.push_back(attribute(model, dataset.features, node, exemplars.class_id, settings));
    confidences.push_back(probabilities(node, exemplars.class_id));
  }
  ClassProfile profile = aggregate(attributions, settings.aggregation, confidences, settings.top_k);
  profile.exemplars = exemplars;
  return profile;
}

std::vector<ClassProfile> explain(const TrainedModel& model, const Dataset& dataset, const ExplainSettings& settings) {
  const Matrix embeddings = model.embeddings(dataset.features);
  const Matrix probabilities = softmax_rows(model.logits(dataset.features));
  std::vector<ClassProfile> profiles;
  for (int c = 0; c < dataset.class_count; ++c) {
    const auto exemplars = select_exemplars(embeddings, probabilities, dataset, c, settings);
    profiles.push_back(profile_from_exemplars(model, dataset, exemplars, probabilities, settings));
  }
  return profiles;
}

}  // namespace graft
