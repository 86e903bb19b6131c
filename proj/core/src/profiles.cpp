#include "graft/profiles.hpp"

#include "graft/random.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace graft {

std::string_view to_string(Aggregation aggregation) {
  switch (aggregation) {
    case Aggregation::MEAN:
      return "MEAN";
    case Aggregation::CONF_WEIGHTED:
      return "CONF_WEIGHTED";
    case Aggregation::MEDIAN:
      return "MEDIAN";
    case Aggregation::MAX:
      return "MAX";
  }
  return "MEAN";
}

Aggregation parse_aggregation(std::string_view text) {
  std::string key(text);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::toupper(c); });
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "MEAN") return Aggregation::MEAN;
  if (key == "CONF_WEIGHTED" || key == "CW") return Aggregation::CONF_WEIGHTED;
  if (key == "MEDIAN") return Aggregation::MEDIAN;
  if (key == "MAX") return Aggregation::MAX;
  throw std::invalid_argument("unknown aggregation '" + std::string(text) + "'");
}

std::vector<Index> ClassProfile::top_indices() const {
  std::vector<Index> out;
  out.reserve(top_k.size());
  for (const auto& f : top_k) out.push_back(f.index);
  return out;
}

std::vector<RankedFeature> top_k(const Eigen::VectorXd& scores, std::size_t K) {
  const auto n = static_cast<std::size_t>(scores.size());
  K = std::min(K, n);
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  const auto better = [&](Index a, Index b) { return scores(a) > scores(b) || (scores(a) == scores(b) && a < b); };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(K), order.end(), better);
  std::vector<RankedFeature> out;
  out.reserve(K);
  for (std::size_t r = 0; r < K; ++r) out.push_back({order[r], scores(order[r])});
  return out;
}

ClassProfile aggregate(std::span<const AttributionVector> attributions, Aggregation mode,
                       std::span<const double> confidences, std::size_t K) {
  if (attributions.empty()) throw std::invalid_argument("aggregate: empty attribution list");
  const Index d = attributions.front().values.size();
  for (const auto& a : attributions) {
    if (a.values.size() != d) throw std::invalid_argument("aggregate: attribution lengths differ");
  }
  const auto m = attributions.size();
  // Sums run in ascending node order so the result does not depend on exemplar order.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return attributions[a].node < attributions[b].node; });

  ClassProfile profile;
  profile.class_id = attributions.front().class_id;
  profile.aggregation = mode;
  profile.method = attributions.front().method;
  profile.steps = attributions.front().steps;
  profile.quadrature = attributions.front().quadrature;
  profile.exemplars.class_id = profile.class_id;
  for (const auto& a : attributions) profile.exemplars.nodes.push_back(a.node);

  profile.signed_mean = Eigen::VectorXd::Zero(d);
  for (std::size_t e : order) profile.signed_mean += attributions[e].values;
  profile.signed_mean /= static_cast<double>(m);

  switch (mode) {
    case Aggregation::MEAN: {
      profile.aggregate = Eigen::VectorXd::Zero(d);
      for (std::size_t e : order) profile.aggregate += attributions[e].values.cwiseAbs();
      profile.aggregate /= static_cast<double>(m);
      break;
    }
    case Aggregation::CONF_WEIGHTED: {
      if (confidences.size() != m) {
        throw std::invalid_argument("aggregate: CONF_WEIGHTED needs one confidence per exemplar");
      }
      double mass = 0.0;
      for (double p : confidences) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("aggregate: confidence outside [0, 1]");
        mass += p;
      }
      if (!(mass > 0.0)) throw std::invalid_argument("aggregate: zero confidence mass");
      profile.aggregate = Eigen::VectorXd::Zero(d);
      // Uniform weights reduce to the same summation order as MEAN, so the two agree bit-for-bit.
      const bool uniform = std::all_of(confidences.begin(), confidences.end(),
                                       [&](double p) { return p == confidences.front(); });
      if (uniform) {
        for (std::size_t e : order) profile.aggregate += attributions[e].values.cwiseAbs();
        profile.aggregate /= static_cast<double>(m);
      } else {
        for (std::size_t e : order) profile.aggregate += confidences[e] * attributions[e].values.cwiseAbs();
        profile.aggregate /= mass;
      }
      break;
    }
    case Aggregation::MEDIAN:
    case Aggregation::MAX: {
      profile.aggregate = Eigen::VectorXd::Zero(d);
      std::vector<double> column(m);
      for (Index i = 0; i < d; ++i) {
        for (std::size_t e = 0; e < m; ++e) column[e] = std::abs(attributions[e].values(i));
        if (mode == Aggregation::MAX) {
          profile.aggregate(i) = *std::max_element(column.begin(), column.end());
        } else {
          std::sort(column.begin(), column.end());
          profile.aggregate(i) = m % 2 == 1 ? column[m / 2] : 0.5 * (column[m / 2 - 1] + column[m / 2]);
        }
      }
      break;
    }
  }
  profile.top_k = top_k(profile.aggregate, K);
  return profile;
}

std::vector<ContrastiveProfile> contrastive(std::span<const ClassProfile> profiles, std::size_t K) {
  if (profiles.size() < 2) throw std::invalid_argument("contrastive: need at least two classes");
  for (std::size_t c = 0; c < profiles.size(); ++c) {
    if (profiles[c].class_id != static_cast<int>(c)) throw std::invalid_argument("contrastive: missing class");
    if (profiles[c].aggregation != profiles.front().aggregation) {
      throw std::invalid_argument("contrastive: aggregation modes differ across classes");
    }
    if (profiles[c].aggregate.size() != profiles.front().aggregate.size()) {
      throw std::invalid_argument("contrastive: aggregate lengths differ");
    }
  }
  std::vector<ContrastiveProfile> out;
  for (std::size_t c = 0; c < profiles.size(); ++c) {
    Eigen::VectorXd rival = Eigen::VectorXd::Constant(profiles[c].aggregate.size(),
                                                      -std::numeric_limits<double>::infinity());
    for (std::size_t other = 0; other < profiles.size(); ++other) {
      if (other != c) rival = rival.cwiseMax(profiles[other].aggregate);
    }
    ContrastiveProfile cp;
    cp.class_id = static_cast<int>(c);
    cp.delta = profiles[c].aggregate - rival;
    cp.top_k = top_k(cp.delta, K);
    out.push_back(std::move(cp));
  }
  return out;
}

BaselineProfile frequency_profile(const Dataset& dataset, int class_id, std::size_t K) {
  const auto nodes = dataset.class_nodes(class_id, Split::Train);
  if (nodes.empty()) throw std::invalid_argument("frequency_profile: class has no training nodes");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dataset.feature_dim());
  for (Index v : nodes) {
    for (FeatureMatrix::InnerIterator it(dataset.features, v); it; ++it) mean(it.col()) += it.value();
  }
  mean /= static_cast<double>(nodes.size());
  BaselineProfile out{class_id, BaselineMethod::FREQUENCY, {}, std::nullopt};
  for (const auto& f : top_k(mean, K)) out.top_k.push_back(f.index);
  return out;
}

BaselineProfile random_profile(Index feature_dim, std::size_t K, std::uint64_t seed, int class_id) {
  if (static_cast<Index>(K) > feature_dim) throw std::invalid_argument("random_profile: K exceeds feature_dim");
  Rng rng(seed);
  BaselineProfile out{class_id, BaselineMethod::RANDOM, {}, seed};
  for (std::size_t i : sample_without_replacement(static_cast<std::size_t>(feature_dim), K, rng)) {
    out.top_k.push_back(static_cast<Index>(i));
  }
  return out;
}

}  // namespace graft
