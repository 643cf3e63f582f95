#include "adp/attacks.hpp"

#include <bit>
#include <cmath>
#include <numeric>

#include "adp/errors.hpp"

namespace adp {

namespace {

Vector normalized(std::span<const double> v) {
  Vector out(v.begin(), v.end());
  const double n = l2_norm(v);
  if (n > 0.0)
    for (double& e : out) e /= n;
  else
    std::fill(out.begin(), out.end(), 0.0);
  return out;
}

Vector ascent_step(std::span<const double> x, std::span<const double> dir, double alpha, NormKind norm) {
  Vector out(x.begin(), x.end());
  if (norm == NormKind::Linf) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (dir[i] > 0.0)
        out[i] += alpha;
      else if (dir[i] < 0.0)
        out[i] -= alpha;
    }
  } else {
    const double n = l2_norm(dir);
    if (n > 0.0)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * dir[i] / n;
  }
  return out;
}

double classifier_loss(const MlpModel& classifier, std::span<const double> x, std::size_t y) {
  return softmax_cross_entropy(mlp_forward(classifier, x), y).loss;
}

struct IterationHooks {
  std::function<Vector(std::span<const double>, std::size_t)> direction;
  std::function<double(std::span<const double>)> objective;
  std::function<std::size_t(std::span<const double>)> label;
  std::size_t queries_per_step = 1;
};

AttackResult iterate(std::span<const double> x, std::size_t y, const AttackConfig& cfg, const IterationHooks& hooks) {
  cfg.validate();
  const double alpha = cfg.effective_step_size();
  AttackResult result;
  Vector cur(x.begin(), x.end());
  result.loss_trace.push_back(hooks.objective(cur));
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const Vector dir = normalized(hooks.direction(cur, t));
    result.queries += hooks.queries_per_step;
    cur = project_ball(ascent_step(cur, dir, alpha, cfg.threat.norm), x, cfg.threat, cfg.box);
    result.loss_trace.push_back(hooks.objective(cur));
  }
  result.success = hooks.label(cur) != y;
  result.adversarial = std::move(cur);
  return result;
}

Vector combine(double w, std::span<const double> a, std::span<const double> b) {
  const Vector na = normalized(a);
  const Vector nb = normalized(b);
  Vector out(na.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w * na[i] + (1.0 - w) * nb[i];
  return out;
}

// Stream ids inside an attack's seed.
constexpr std::uint64_t kIterationStream = 11;
constexpr std::uint64_t kEvaluationStream = 12;

}  // namespace

Purifier identity_purifier() {
  return [](std::span<const double> x, RngStream&) { return Vector(x.begin(), x.end()); };
}

void AttackConfig::validate() const {
  threat.validate();
  if (eot_samples < 1) throw DomainError("attack: eot_samples must be >= 1");
  if (!(eot_sigma >= 0.0)) throw DomainError("attack: eot_sigma must be >= 0");
  if (!(joint_weight >= 0.0 && joint_weight <= 1.0)) throw DomainError("attack: joint_weight must lie in [0, 1]");
  if (spsa_queries < 2 || spsa_queries % 2 != 0) throw DomainError("attack: spsa_queries must be even and >= 2");
  if (!(spsa_perturb > 0.0)) throw DomainError("attack: spsa_perturb must be > 0");
  if (!(step_size >= 0.0)) throw DomainError("attack: step_size must be >= 0");
  box.validate();
}

double AttackConfig::effective_step_size() const {
  if (step_size > 0.0) return step_size;
  return steps == 0 ? 0.0 : 2.5 * threat.epsilon / static_cast<double>(steps);
}

Vector classifier_loss_grad(const MlpModel& classifier, std::span<const double> x, std::size_t y) {
  const CrossEntropy ce = softmax_cross_entropy(mlp_forward(classifier, x), y);
  return mlp_input_grad(classifier, x, ce.dlogits);
}

AttackResult pgd(const MlpModel& classifier, std::span<const double> x, std::size_t y, const AttackConfig& cfg) {
  IterationHooks hooks;
  hooks.direction = [&](std::span<const double> xt, std::size_t) { return classifier_loss_grad(classifier, xt, y); };
  hooks.objective = [&](std::span<const double> xt) { return classifier_loss(classifier, xt, y); };
  hooks.label = [&](std::span<const double> xt) { return predict_label(classifier, xt); };
  return iterate(x, y, cfg, hooks);
}

Vector eot_gradient(const EotGradFn& grad_fn, std::span<const double> x, std::size_t n, double sigma,
                    const RngStream& rng) {
  if (n < 1) throw DomainError("eot_gradient: n must be >= 1");
  Vector mean;
  Vector point(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    RngStream sub = rng.derive(i);
    const Vector noise = gaussian_sample(sub, x.size(), 0.0, sigma);
    for (std::size_t d = 0; d < x.size(); ++d) point[d] = x[d] + noise[d];
    const Vector g = grad_fn(point, sub);
    if (i == 0) {
      mean = g;
      continue;
    }
    const double inv = 1.0 / static_cast<double>(i + 1);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += (g[d] - mean[d]) * inv;
  }
  return mean;
}

AttackResult bpda(const Purifier& purifier, const MlpModel& classifier, std::span<const double> x, std::size_t y,
                  const AttackConfig& cfg) {
  const RngStream root(cfg.seed, kIterationStream);
  const EotGradFn grad_at_purified = [&](std::span<const double> v, RngStream& rng) {
    const Vector p = purifier(v, rng);
    return classifier_loss_grad(classifier, p, y);
  };
  auto purified_eval = [&](std::span<const double> xt) {
    RngStream rng(cfg.seed, kEvaluationStream);
    return purifier(xt, rng);
  };
  IterationHooks hooks;
  hooks.direction = [&](std::span<const double> xt, std::size_t t) {
    return eot_gradient(grad_at_purified, xt, cfg.eot_samples, cfg.eot_sigma, root.derive(t));
  };
  hooks.objective = [&](std::span<const double> xt) { return classifier_loss(classifier, purified_eval(xt), y); };
  hooks.label = [&](std::span<const double> xt) { return predict_label(classifier, purified_eval(xt)); };
  hooks.queries_per_step = cfg.eot_samples;
  return iterate(x, y, cfg, hooks);
}

Vector spsa_gradient(const LossFn& loss, std::span<const double> x, std::size_t queries, double perturb,
                     SpsaDirections mode, RngStream& rng) {
  if (queries < 2 || queries % 2 != 0) throw DomainError("spsa_gradient: queries must be even and >= 2");
  const std::size_t dim = x.size();
  const std::size_t pairs = queries / 2;
  const std::size_t block = std::bit_ceil(dim);

  Vector estimate(dim, 0.0);
  Vector v(dim), plus(dim), minus(dim);
  std::vector<std::size_t> perm(dim), rows(block);
  Vector col_sign(dim);
  for (std::size_t i = 0; i < pairs; ++i) {
    if (mode == SpsaDirections::Independent) {
      for (double& e : v) e = rng.rademacher();
    } else {
      const std::size_t pos = i % block;
      if (pos == 0) {
        // New block: random column subset/order of the Hadamard matrix, random
        // column signs, random row order.
        std::vector<std::size_t> cols(block);
        std::iota(cols.begin(), cols.end(), 0);
        for (std::size_t k = block; k > 1; --k) std::swap(cols[k - 1], cols[rng.uniform_index(k)]);
        std::copy(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(dim), perm.begin());
        for (double& s : col_sign) s = rng.rademacher();
        std::iota(rows.begin(), rows.end(), 0);
        for (std::size_t k = block; k > 1; --k) std::swap(rows[k - 1], rows[rng.uniform_index(k)]);
      }
      const std::size_t r = rows[pos];
      for (std::size_t j = 0; j < dim; ++j)
        v[j] = ((std::popcount(r & perm[j]) & 1u) ? -1.0 : 1.0) * col_sign[j];
    }
    for (std::size_t j = 0; j < dim; ++j) {
      plus[j] = x[j] + perturb * v[j];
      minus[j] = x[j] - perturb * v[j];
    }
    const double slope = (loss(plus) - loss(minus)) / (2.0 * perturb);
    for (std::size_t j = 0; j < dim; ++j) estimate[j] += slope * v[j];
  }
  for (double& e : estimate) e /= static_cast<double>(pairs);
  return estimate;
}

AttackResult spsa_attack(const LossFn& loss_fn, const std::function<std::size_t(std::span<const double>)>& label_fn,
                         std::span<const double> x, std::size_t y, const AttackConfig& cfg) {
  RngStream rng(cfg.seed, kIterationStream);
  IterationHooks hooks;
  hooks.direction = [&](std::span<const double> xt, std::size_t) {
    return spsa_gradient(loss_fn, xt, cfg.spsa_queries, cfg.spsa_perturb, cfg.spsa_directions, rng);
  };
  hooks.objective = loss_fn;
  hooks.label = label_fn;
  hooks.queries_per_step = cfg.spsa_queries;
  return iterate(x, y, cfg, hooks);
}

AttackResult joint_score_attack(const MlpModel& classifier, const ScoreFn& score, std::span<const double> x,
                                std::size_t y, const AttackConfig& cfg) {
  IterationHooks hooks;
  hooks.direction = [&](std::span<const double> xt, std::size_t) {
    Vector neg = score(xt);
    for (double& e : neg) e = -e;
    return combine(cfg.joint_weight, classifier_loss_grad(classifier, xt, y), neg);
  };
  hooks.objective = [&](std::span<const double> xt) { return classifier_loss(classifier, xt, y); };
  hooks.label = [&](std::span<const double> xt) { return predict_label(classifier, xt); };
  hooks.queries_per_step = 2;
  return iterate(x, y, cfg, hooks);
}

AttackResult joint_full_attack(const MlpModel& classifier, const Purifier& purifier, std::span<const double> x,
                               std::size_t y, const AttackConfig& cfg) {
  const RngStream root(cfg.seed, kIterationStream);
  auto purified_eval = [&](std::span<const double> xt) {
    RngStream rng(cfg.seed, kEvaluationStream);
    return purifier(xt, rng);
  };
  IterationHooks hooks;
  hooks.direction = [&](std::span<const double> xt, std::size_t t) {
    RngStream rng = root.derive(t);
    const Vector p = purifier(xt, rng);
    Vector diff(xt.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = xt[i] - p[i];
    return combine(cfg.joint_weight, classifier_loss_grad(classifier, xt, y), diff);
  };
  hooks.objective = [&](std::span<const double> xt) { return classifier_loss(classifier, purified_eval(xt), y); };
  hooks.label = [&](std::span<const double> xt) { return predict_label(classifier, purified_eval(xt)); };
  hooks.queries_per_step = 2;
  return iterate(x, y, cfg, hooks);
}

AttackResult approximate_input_attack(const MlpModel& classifier, const Purifier& purifier, std::span<const double> x,
                                      std::size_t y, const AttackConfig& cfg) {
  cfg.validate();
  const double alpha = cfg.effective_step_size();
  const RngStream root(cfg.seed, kIterationStream);
  AttackResult result;
  Vector base(x.begin(), x.end());  // purified iterate the next gradient step starts from
  Vector adv(x.begin(), x.end());
  result.loss_trace.push_back(classifier_loss(classifier, adv, y));
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const Vector dir = normalized(classifier_loss_grad(classifier, base, y));
    adv = project_ball(ascent_step(base, dir, alpha, cfg.threat.norm), x, cfg.threat, cfg.box);
    RngStream rng = root.derive(t);
    base = project_ball(purifier(adv, rng), x, cfg.threat, cfg.box);
    result.queries += 2;
    result.loss_trace.push_back(classifier_loss(classifier, adv, y));
  }
  RngStream eval_rng(cfg.seed, kEvaluationStream);
  result.success = predict_label(classifier, purifier(adv, eval_rng)) != y;
  result.adversarial = std::move(adv);
  return result;
}

Matrix score_jacobian(const ScoreFn& score, std::span<const double> x, double h) {
  const std::size_t dim = x.size();
  Matrix jac(dim, dim);
  Vector plus(x.begin(), x.end()), minus(x.begin(), x.end());
  for (std::size_t j = 0; j < dim; ++j) {
    plus[j] = x[j] + h;
    minus[j] = x[j] - h;
    const Vector sp = score(plus);
    const Vector sm = score(minus);
    for (std::size_t i = 0; i < dim; ++i) jac(i, j) = (sp[i] - sm[i]) / (2.0 * h);
    plus[j] = x[j];
    minus[j] = x[j];
  }
  return jac;
}

Vector unrolled_input_grad(const MlpModel& classifier, const ScoreFn& score, std::span<const double> x, std::size_t y,
                           double alpha0) {
  if (alpha0 == 0.0) return classifier_loss_grad(classifier, x, y);
  const Vector s = score(x);
  Vector x1(x.begin(), x.end());
  for (std::size_t i = 0; i < x1.size(); ++i) x1[i] += alpha0 * s[i];
  const Vector upstream = classifier_loss_grad(classifier, x1, y);
  const Matrix jac = score_jacobian(score, x);
  // (I + alpha0 J)^T u
  Vector g = upstream;
  for (std::size_t j = 0; j < g.size(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) col += jac(i, j) * upstream[i];
    g[j] += alpha0 * col;
  }
  return g;
}

AttackResult one_step_unrolling_attack(const MlpModel& classifier, const ScoreFn& score, std::span<const double> x,
                                       std::size_t y, const AttackConfig& cfg) {
  const double alpha0 = cfg.unroll_step;
  auto unrolled = [&](std::span<const double> xt) {
    Vector x1(xt.begin(), xt.end());
    if (alpha0 == 0.0) return x1;
    const Vector s = score(xt);
    for (std::size_t i = 0; i < x1.size(); ++i) x1[i] += alpha0 * s[i];
    return x1;
  };
  IterationHooks hooks;
  hooks.direction = [&](std::span<const double> xt, std::size_t) {
    return unrolled_input_grad(classifier, score, xt, y, alpha0);
  };
  hooks.objective = [&](std::span<const double> xt) { return classifier_loss(classifier, unrolled(xt), y); };
  hooks.label = [&](std::span<const double> xt) { return predict_label(classifier, unrolled(xt)); };
  hooks.queries_per_step = alpha0 == 0.0 ? 1 : 2 * x.size() + 2;
  return iterate(x, y, cfg, hooks);
}

}  // namespace adp
