#include "adp/detect.hpp"

#include <algorithm>
#include <cmath>

#include "adp/errors.hpp"

namespace adp {

void DetectConfig::validate() const {
  if (!(s_th > 0.0)) throw DomainError("detect: s_th must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("detect: beta must lie in (0, 1]");
  if (!(base_sigma >= 0.0)) throw DomainError("detect: base_sigma must be >= 0");
}

const char* to_string(Verdict v) { return v == Verdict::Attacked ? "attacked" : "natural"; }

double score_norm(const ScoreFn& score, std::span<const double> x) { return l2_norm(score(x)); }

Verdict detect(const ScoreFn& score, std::span<const double> x, const DetectConfig& cfg) {
  return score_norm(score, x) > cfg.s_th ? Verdict::Attacked : Verdict::Natural;
}

DualNoiseResult dual_noise_purify(const ScoreFn& score, const MlpModel& classifier, std::span<const double> x,
                                  const PurifyConfig& purify_cfg, const DetectConfig& detect_cfg,
                                  const RngStream& rng) {
  detect_cfg.validate();
  DualNoiseResult out;
  out.verdict = detect(score, x, detect_cfg);
  PurifyConfig cfg = purify_cfg;
  cfg.sigma = out.verdict == Verdict::Attacked ? detect_cfg.base_sigma : detect_cfg.beta * detect_cfg.base_sigma;
  out.sigma_used = cfg.sigma;
  out.prediction = ensemble_predict(score, classifier, x, cfg, rng);
  return out;
}

Histogram histogram(const std::vector<NamedValues>& sets, std::size_t bins) {
  if (bins == 0) throw DomainError("histogram: bins must be >= 1");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : sets) {
    if (s.values.empty()) throw InsufficientData("histogram: set '" + s.name + "' is empty");
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  Histogram h;
  if (sets.empty()) return h;
  if (!(hi > lo)) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(lo + width * static_cast<double>(b));
  h.edges.back() = hi;
  for (const auto& s : sets) {
    h.sets.push_back(s.name);
    std::vector<std::size_t> counts(bins, 0);
    for (double v : s.values) {
      auto b = static_cast<std::size_t>((v - lo) / width);
      ++counts[std::min(b, bins - 1)];
    }
    h.counts.push_back(std::move(counts));
  }
  return h;
}

Histogram score_norm_histogram(const ScoreFn& score, const std::vector<NamedPoints>& sets, std::size_t bins) {
  std::vector<NamedValues> norms;
  for (const auto& s : sets) {
    NamedValues nv{s.name, {}};
    for (std::size_t i = 0; i < s.points.rows; ++i) nv.values.push_back(score_norm(score, s.points.row(i)));
    norms.push_back(std::move(nv));
  }
  return histogram(norms, bins);
}

double calibrate_threshold(std::vector<double> natural_norms, double quantile) {
  if (natural_norms.empty()) throw InsufficientData("calibrate_threshold: no natural samples");
  if (!(quantile > 0.0 && quantile <= 1.0)) throw DomainError("calibrate_threshold: quantile must lie in (0, 1]");
  std::sort(natural_norms.begin(), natural_norms.end());
  auto rank = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(natural_norms.size())));
  rank = std::clamp<std::size_t>(rank, 1, natural_norms.size());
  return natural_norms[rank - 1];
}

double detection_auc(std::span<const double> natural_norms, std::span<const double> attacked_norms) {
  if (natural_norms.empty() || attacked_norms.empty()) throw InsufficientData("detection_auc: empty set");
  double wins = 0.0;
  for (double a : attacked_norms)
    for (double n : natural_norms) wins += a > n ? 1.0 : (a == n ? 0.5 : 0.0);
  return wins / (static_cast<double>(natural_norms.size()) * static_cast<double>(attacked_norms.size()));
}

}  // namespace adp
