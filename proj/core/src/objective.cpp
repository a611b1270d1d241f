// SPDX-License-Identifier: Apache-2.0
#include "lingogap/objective.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lingogap {

std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::ss: return "ss";
    case Direction::st: return "st";
    case Direction::ts: return "ts";
    case Direction::tt: return "tt";
  }
  return "ss";
}

Direction direction_from_string(std::string_view s) {
  for (Direction d : kDirections)
    if (to_string(d) == s) return d;
  throw DomainError("unknown direction '" + std::string(s) + "'");
}

bool question_is_source(Direction d) noexcept {
  return d == Direction::ss || d == Direction::st;
}

bool answer_is_source(Direction d) noexcept {
  return d == Direction::ss || d == Direction::ts;
}

void LossWeights::validate() const {
  if (!std::isfinite(alpha) || alpha < 0.0)
    throw InvariantError("alpha", "must be finite and >= 0");
  if (!std::isfinite(beta) || beta < 0.0)
    throw InvariantError("beta", "must be finite and >= 0");
}

void DirectionalBatch::validate() const {
  for (Direction d : kDirections) {
    const auto &e = (*this)[d];
    if (e.dist.length() != e.gold.size())
      throw AlignmentError(std::string(to_string(d)) +
                           ": distribution length differs from gold length");
  }
  const auto vocab = [&](Direction d) -> std::size_t {
    const auto &s = (*this)[d].dist.steps();
    return s.empty() ? 0 : s.front().size();
  };
  const std::size_t v = vocab(Direction::ss);
  for (Direction d : kDirections)
    if (vocab(d) != 0 && v != 0 && vocab(d) != v)
      throw AlignmentError("directional entries use different vocabularies");
}

LossBreakdown &LossBreakdown::operator+=(const LossBreakdown &o) {
  ce_ss += o.ce_ss;
  ce_ts += o.ce_ts;
  ce_st += o.ce_st;
  ce_tt += o.ce_tt;
  kl_to_tt += o.kl_to_tt;
  kl_to_ss += o.kl_to_ss;
  total += o.total;
  return *this;
}

LossBreakdown LossBreakdown::scaled(double f) const {
  LossBreakdown r = *this;
  r.ce_ss *= f;
  r.ce_ts *= f;
  r.ce_st *= f;
  r.ce_tt *= f;
  r.kl_to_tt *= f;
  r.kl_to_ss *= f;
  r.total *= f;
  return r;
}

bool LossBreakdown::all_finite() const {
  for (double v : {ce_ss, ce_ts, ce_st, ce_tt, kl_to_tt, kl_to_ss, total})
    if (!std::isfinite(v)) return false;
  return true;
}

std::string LossBreakdown::describe() const {
  std::ostringstream os;
  os << "ce_ss=" << ce_ss << " ce_ts=" << ce_ts << " ce_st=" << ce_st
     << " ce_tt=" << ce_tt << " kl_to_tt=" << kl_to_tt
     << " kl_to_ss=" << kl_to_ss << " total=" << total;
  return os.str();
}

double cross_entropy(const SequenceDistribution &dist, const Tokens &gold,
                     double eps) {
  if (dist.length() != gold.size())
    throw AlignmentError("cross_entropy: " + std::to_string(dist.length()) +
                         " steps vs " + std::to_string(gold.size()) +
                         " gold tokens");
  double ce = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto &step = dist.steps()[i];
    if (gold[i] < 0 || static_cast<std::size_t>(gold[i]) >= step.size())
      throw DomainError("cross_entropy: gold token outside vocabulary");
    const double p = smoothed(step[gold[i]], step.size(), eps);
    if (p == 0.0) throw DomainError("cross_entropy: zero probability on gold");
    ce -= std::log(p);
  }
  return ce;
}

LossBreakdown mvcl_mi_loss(const DirectionalBatch &batch, const LossWeights &w,
                           const ObjectiveTerms &terms,
                           const FrozenTeachers *teachers) {
  w.validate();
  batch.validate();
  LossBreakdown b;
  b.ce_ss = cross_entropy(batch[Direction::ss].dist, batch[Direction::ss].gold);
  b.ce_tt = cross_entropy(batch[Direction::tt].dist, batch[Direction::tt].gold);
  if (terms.cross_ce) {
    b.ce_ts =
        cross_entropy(batch[Direction::ts].dist, batch[Direction::ts].gold);
    b.ce_st =
        cross_entropy(batch[Direction::st].dist, batch[Direction::st].gold);
  }
  const auto &t_tt = teachers ? teachers->tt : batch[Direction::tt].dist;
  const auto &t_ss = teachers ? teachers->ss : batch[Direction::ss].dist;
  if (w.alpha != 0.0)
    b.kl_to_tt = sequence_kl(batch[Direction::st].dist, t_tt, terms.kl);
  if (w.beta != 0.0)
    b.kl_to_ss = sequence_kl(batch[Direction::ts].dist, t_ss, terms.kl);
  b.total = b.ce_ss + b.ce_ts + b.ce_st + b.ce_tt + w.alpha * b.kl_to_tt +
            w.beta * b.kl_to_ss;
  return b;
}

namespace {

// Softmax Jacobian-vector product: dz_k = p_k (g_k - sum_m p_m g_m).
void softmax_backward(const StepDistribution &p, const std::vector<double> &g,
                      std::vector<double> &dz) {
  double dot = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) dot += p[k] * g[k];
  for (std::size_t k = 0; k < p.size(); ++k) dz[k] += p[k] * (g[k] - dot);
}

void add_ce_grad(const DirectionalEntry &e, double scale,
                 std::vector<std::vector<double>> &out) {
  const std::size_t v = e.dist.steps().empty() ? 0 : e.dist.steps()[0].size();
  std::vector<double> g(v);
  for (std::size_t i = 0; i < e.gold.size(); ++i) {
    const auto &step = e.dist.steps()[i];
    std::fill(g.begin(), g.end(), 0.0);
    const double pt = smoothed(step[e.gold[i]], v);
    g[e.gold[i]] = -scale * (1.0 - kSmoothing) / pt;
    softmax_backward(step, g, out[i]);
  }
}

void add_kl_grad(const SequenceDistribution &student,
                 const SequenceDistribution &teacher, double scale,
                 std::vector<std::vector<double>> &out) {
  const std::size_t v =
      student.steps().empty() ? 0 : student.steps()[0].size();
  std::vector<double> g(v);
  for (std::size_t i = 0; i < student.length(); ++i) {
    const auto &s = student.steps()[i];
    const auto &t = teacher.steps()[i];
    for (std::size_t k = 0; k < v; ++k) {
      const double sk = smoothed(s[k], v);
      const double tk = smoothed(t[k], v);
      g[k] = scale * (1.0 - kSmoothing) * (std::log(sk / tk) + 1.0);
    }
    softmax_backward(s, g, out[i]);
  }
}

}  // namespace

LogitGradients mvcl_mi_logit_gradients(const DirectionalBatch &batch,
                                       const LossWeights &w,
                                       const ObjectiveTerms &terms) {
  w.validate();
  batch.validate();
  LogitGradients out;
  for (Direction d : kDirections) {
    const auto &e = batch[d];
    const std::size_t v = e.dist.steps().empty() ? 0 : e.dist.steps()[0].size();
    out[d].assign(e.dist.length(), std::vector<double>(v, 0.0));
  }
  add_ce_grad(batch[Direction::ss], 1.0, out[Direction::ss]);
  add_ce_grad(batch[Direction::tt], 1.0, out[Direction::tt]);
  if (terms.cross_ce) {
    add_ce_grad(batch[Direction::ts], 1.0, out[Direction::ts]);
    add_ce_grad(batch[Direction::st], 1.0, out[Direction::st]);
  }
  const auto kl_scale = [&](const SequenceDistribution &s, double weight) {
    if (terms.kl == KlAggregation::mean && s.length() > 0)
      return weight / static_cast<double>(s.length());
    return weight;
  };
  if (w.alpha != 0.0) {
    const auto &s = batch[Direction::st].dist;
    if (s.length() != batch[Direction::tt].dist.length())
      throw AlignmentError("st and tt lengths differ");
    add_kl_grad(s, batch[Direction::tt].dist, kl_scale(s, w.alpha),
                out[Direction::st]);
  }
  if (w.beta != 0.0) {
    const auto &s = batch[Direction::ts].dist;
    if (s.length() != batch[Direction::ss].dist.length())
      throw AlignmentError("ts and ss lengths differ");
    add_kl_grad(s, batch[Direction::ss].dist, kl_scale(s, w.beta),
                out[Direction::ts]);
  }
  return out;
}

GradientResult loss_gradient(DirectionalProblem &problem, const LossWeights &w,
                             const ObjectiveTerms &terms) {
  GradientResult r;
  r.gradient.assign(problem.parameters().size(), 0.0);
  for (std::size_t ex = 0; ex < problem.num_examples(); ++ex) {
    const DirectionalBatch batch = problem.forward(ex);
    r.loss += mvcl_mi_loss(batch, w, terms);
    problem.backward(ex, mvcl_mi_logit_gradients(batch, w, terms), r.gradient);
  }
  for (std::size_t i = 0; i < r.gradient.size(); ++i)
    if (!std::isfinite(r.gradient[i]))
      throw NumericalError(problem.parameter_name(i), "non-finite gradient");
  return r;
}

GradientCheckResult check_gradient(DirectionalProblem &problem,
                                   const LossWeights &w,
                                   const ObjectiveTerms &terms, double h,
                                   double floor,
                                   std::span<const std::size_t> indices) {
  const GradientResult analytic = loss_gradient(problem, w, terms);

  std::vector<FrozenTeachers> teachers;
  teachers.reserve(problem.num_examples());
  for (std::size_t ex = 0; ex < problem.num_examples(); ++ex) {
    DirectionalBatch b = problem.forward(ex);
    teachers.push_back({b[Direction::ss].dist, b[Direction::tt].dist});
  }
  const auto total = [&] {
    double sum = 0.0;
    for (std::size_t ex = 0; ex < problem.num_examples(); ++ex)
      sum += mvcl_mi_loss(problem.forward(ex), w, terms, &teachers[ex]).total;
    return sum;
  };

  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(problem.parameters().size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    indices = all;
  }

  GradientCheckResult res;
  auto params = problem.parameters();
  for (std::size_t i : indices) {
    const double orig = params[i];
    params[i] = orig + h;
    const double up = total();
    params[i] = orig - h;
    const double down = total();
    params[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.gradient[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    const double rel = std::abs(a - numeric) / denom;
    ++res.checked;
    if (rel > res.max_relative_error || res.checked == 1) {
      res.max_relative_error = rel;
      res.worst_index = i;
      res.worst_parameter = problem.parameter_name(i);
      res.worst_analytic = a;
      res.worst_numeric = numeric;
    }
  }
  return res;
}

}  // namespace lingogap
