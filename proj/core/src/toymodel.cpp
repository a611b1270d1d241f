// SPDX-License-Identifier: Apache-2.0
#include "lingogap/toymodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <type_traits>

#include <Eigen/Dense>

namespace lingogap {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

enum Seg : std::size_t {
  kGlyph, kProjW, kProjB, kToken, kKey, kQueryW, kValue,
  kReadW, kCtxW, kHiddenB, kOutW, kOutB, kNumSegments
};

constexpr std::array<const char *, kNumSegments> kSegmentNames = {
    "glyph_embed", "proj_w", "proj_b", "token_embed", "attn_key", "query_weight",
    "attn_value",  "read_w", "ctx_w",  "hidden_b",    "out_w",    "out_b"};

template <class T>
struct Params {
  using M = std::conditional_t<std::is_const_v<T>, Eigen::Map<const Mat>,
                               Eigen::Map<Mat>>;
  using V = std::conditional_t<std::is_const_v<T>, Eigen::Map<const Vec>,
                               Eigen::Map<Vec>>;
  M G, Wp;
  V bp;
  M T_, A;
  V wq;
  M U, Wr, Wc;
  V bh;
  M O;
  V bo;
};

template <class T>
Params<T> bind(const std::vector<Segment> &segs, T *base) {
  using P = Params<T>;
  const auto m = [&](Seg s) {
    return typename P::M(base + segs[s].offset,
                         static_cast<Eigen::Index>(segs[s].rows),
                         static_cast<Eigen::Index>(segs[s].cols));
  };
  const auto v = [&](Seg s) {
    return typename P::V(base + segs[s].offset,
                         static_cast<Eigen::Index>(segs[s].size()));
  };
  return P{m(kGlyph), m(kProjW), v(kProjB), m(kToken), m(kKey), v(kQueryW),
           m(kValue), m(kReadW), m(kCtxW), v(kHiddenB), m(kOutW), v(kOutB)};
}

Vec softmax(const Vec &z) {
  if (!z.allFinite()) throw NumericalError("logits", "non-finite logit (overflow)");
  const double mx = z.maxCoeff();
  Vec p = (z.array() - mx).exp().matrix();
  p /= p.sum();
  return p;
}

constexpr double kKeyNormEps = 1e-6;

}  // namespace

struct StepTrace {
  Tokens prefix;
  Vec c;
  Vec h;
  Vec p;
};

struct HeadTrace {
  Tokens question;
  Mat qemb;
  Mat qv;
  Vec wtil;
  Vec a;
  Vec r;
  std::vector<StepTrace> steps;
};

struct VisualTrace {
  std::vector<int> glyphs;  // empty when built from projected tokens
  Mat v;
  Mat kraw;
  Vec knorm;
  Mat khat;
  Mat m;
  Mat u;
};

struct ToyModel::Trace {
  VisualTrace visual;
  std::array<HeadTrace, 4> heads;
};

namespace {

class Engine {
 public:
  Engine(const ModelConfig &cfg, const std::vector<Segment> &segs,
         const ModelState &s)
      : cfg_(cfg), p_(bind(segs, s.params.data())) {}

  bool tied(TokenId t) const {
    return t >= cfg_.tied_token_begin &&
           t < cfg_.tied_token_begin + cfg_.tied_token_count;
  }
  int tied_glyph(TokenId t) const {
    return cfg_.tied_glyph_begin + (t - cfg_.tied_token_begin);
  }

  void check_token(TokenId t) const {
    if (t < 0 || t >= cfg_.vocab_size)
      throw DomainError("token " + std::to_string(t) + " outside vocabulary");
  }

  Vec embed(TokenId t) const {
    check_token(t);
    if (tied(t))
      return p_.Wp * p_.G.row(tied_glyph(t)).transpose() + p_.bp;
    return p_.T_.row(t).transpose();
  }

  VisualTrace visual_from_projected(Mat v) const {
    VisualTrace vt;
    const Eigen::Index n = v.rows();
    const Eigen::Index pd = v.cols();
    vt.kraw = v * p_.A.transpose();
    vt.knorm = (vt.kraw.rowwise().squaredNorm().array() + kKeyNormEps).sqrt();
    vt.khat = vt.kraw.array().colwise() / vt.knorm.array();
    vt.m = Mat::Zero(n, 2 * pd);
    vt.m.leftCols(pd) = v;
    if (n > 1) vt.m.topRows(n - 1).rightCols(pd) = v.bottomRows(n - 1);
    vt.u = vt.m * p_.U.transpose();
    vt.v = std::move(v);
    return vt;
  }

  Mat project_rows(const Mat &e) const {
    return (e * p_.Wp.transpose()).rowwise() + p_.bp.transpose();
  }

  VisualTrace visual_from_glyphs(const std::vector<int> &glyphs) const {
    Mat e(static_cast<Eigen::Index>(glyphs.size()), p_.G.cols());
    for (std::size_t j = 0; j < glyphs.size(); ++j) e.row(j) = p_.G.row(glyphs[j]);
    VisualTrace vt = visual_from_projected(project_rows(e));
    vt.glyphs = glyphs;
    return vt;
  }

  HeadTrace head(const VisualTrace &vt, const Tokens &question) const {
    if (question.empty()) throw DomainError("empty question");
    if (static_cast<int>(question.size()) > cfg_.max_question_len)
      throw DomainError("question longer than max_question_len");
    HeadTrace h;
    h.question = question;
    const auto L = static_cast<Eigen::Index>(question.size());
    h.qemb.resize(L, cfg_.projector_dim);
    for (Eigen::Index t = 0; t < L; ++t)
      h.qemb.row(t) = embed(question[t]).transpose();
    h.qv = h.qemb * p_.A.transpose();
    h.wtil = h.qv.transpose() * p_.wq.head(L);
    const Vec scores = cfg_.attention_scale * (vt.khat * h.wtil);
    h.a = softmax(scores);
    h.r = vt.u.transpose() * h.a;
    return h;
  }

  StepTrace step(const HeadTrace &h, Tokens prefix) const {
    StepTrace st;
    st.c = Vec::Zero(cfg_.projector_dim);
    for (TokenId t : prefix) st.c += embed(t);
    st.c /= static_cast<double>(prefix.size());
    const Vec pre = p_.Wr * h.r + p_.Wc * st.c + p_.bh;
    st.h = pre.array().tanh().matrix();
    st.p = softmax(p_.O * st.h + p_.bo);
    st.prefix = std::move(prefix);
    return st;
  }

  const Params<const double> &params() const { return p_; }

 private:
  const ModelConfig &cfg_;
  Params<const double> p_;
};

StepDistribution to_step(const Vec &p) {
  return StepDistribution(std::vector<double>(p.data(), p.data() + p.size()));
}

SequenceDistribution to_sequence(const std::vector<StepTrace> &steps,
                                 const Tokens &realized) {
  std::vector<StepDistribution> out;
  out.reserve(steps.size());
  for (const auto &s : steps) out.push_back(to_step(s.p));
  return SequenceDistribution(std::move(out), realized);
}

Mat rows_of(const VisualTokens &v) {
  Mat m(static_cast<Eigen::Index>(v.count()), static_cast<Eigen::Index>(v.dim()));
  std::copy(v.data().begin(), v.data().end(), m.data());
  return m;
}

VisualTokens tokens_of(const Mat &m, bool noisy) {
  return VisualTokens(static_cast<std::size_t>(m.cols()),
                      std::vector<double>(m.data(), m.data() + m.size()), noisy);
}

}  // namespace

void ModelConfig::validate() const {
  const auto positive = [](int v, const char *name) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(glyph_vocab_size, "glyph_vocab_size");
  positive(glyph_embed_dim, "glyph_embed_dim");
  positive(projector_dim, "projector_dim");
  positive(key_dim, "key_dim");
  positive(decoder_hidden_dim, "decoder_hidden_dim");
  positive(vocab_size, "vocab_size");
  positive(max_question_len, "max_question_len");
  positive(max_answer_len, "max_answer_len");
  for (TokenId t : {bos_src, bos_tgt, eos})
    if (t < 0 || t >= vocab_size)
      throw ConfigError("special token outside vocabulary");
  if (tied_token_count < 0 || tied_token_begin < 0 ||
      tied_token_begin + tied_token_count > vocab_size)
    throw ConfigError("tied token range exceeds vocabulary");
  if (tied_token_count > 0 &&
      (tied_glyph_begin < 0 ||
       tied_glyph_begin + tied_token_count > glyph_vocab_size))
    throw ConfigError("tied glyph range exceeds glyph vocabulary");
  if (!(attention_scale > 0.0)) throw ConfigError("attention_scale must be > 0");
  if (!std::isfinite(query_prefix_init))
    throw ConfigError("query_prefix_init must be finite");
  if (!(glyph_init_scale >= 0.0) || !(token_init_scale >= 0.0))
    throw ConfigError("init scales must be >= 0");
}

ModelConfig ModelConfig::for_task(const TaskSpec &spec, std::uint64_t seed) {
  ModelConfig c;
  c.glyph_vocab_size = spec.glyph_vocab_size();
  c.vocab_size = spec.vocab_size();
  c.max_question_len = spec.template_len + 1;
  c.tied_token_begin = kNumSpecialTokens;
  c.tied_token_count = spec.source_vocab_size();
  c.tied_glyph_begin = 1;
  c.seed = seed;
  return c;
}

bool ModelState::all_finite() const {
  return std::all_of(params.begin(), params.end(),
                     [](double v) { return std::isfinite(v); });
}

Tokens Generation::answer(TokenId eos) const {
  Tokens out = tokens;
  if (!out.empty() && out.back() == eos) out.pop_back();
  return out;
}

std::vector<TrainingExample> make_examples(const std::vector<VQASample> &samples) {
  std::vector<TrainingExample> out;
  for (const auto &g : group_by_image(samples)) {
    const auto &ss = samples[g.index[0]];
    const auto &st = samples[g.index[1]];
    const auto &ts = samples[g.index[2]];
    TrainingExample ex;
    ex.image = &ss.image;
    ex.question_src = ss.question;
    ex.question_tgt = ts.question;
    ex.gold_src = ss.gold_answer;
    ex.gold_tgt = st.gold_answer;
    out.push_back(std::move(ex));
  }
  return out;
}

ToyModel::ToyModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t gv = config_.glyph_vocab_size;
  const std::size_t d = config_.glyph_embed_dim;
  const std::size_t p = config_.projector_dim;
  const std::size_t k = config_.key_dim;
  const std::size_t h = config_.decoder_hidden_dim;
  const std::size_t v = config_.vocab_size;
  const std::size_t lq = config_.max_question_len;
  const std::array<std::pair<std::size_t, std::size_t>, kNumSegments> shapes = {{
      {gv, d}, {p, d}, {p, 1}, {v, p}, {k, p}, {lq, 1},
      {k, 2 * p}, {h, k}, {h, p}, {h, 1}, {v, h}, {v, 1}}};
  for (std::size_t s = 0; s < kNumSegments; ++s) {
    segments_.push_back({kSegmentNames[s], num_params_, shapes[s].first,
                         shapes[s].second});
    num_params_ += shapes[s].first * shapes[s].second;
  }
}

const Segment &ToyModel::segment(std::string_view name) const {
  for (const auto &s : segments_)
    if (s.name == name) return s;
  throw DomainError("no parameter segment '" + std::string(name) + "'");
}

std::string ToyModel::parameter_name(std::size_t index) const {
  for (const auto &s : segments_) {
    if (index < s.offset || index >= s.offset + s.size()) continue;
    const std::size_t local = index - s.offset;
    if (s.cols == 1) return s.name + "[" + std::to_string(local) + "]";
    return s.name + "[" + std::to_string(local / s.cols) + "," +
           std::to_string(local % s.cols) + "]";
  }
  return "param[" + std::to_string(index) + "]";
}

ModelState ToyModel::init_state() const {
  ModelState st;
  st.params.assign(num_params_, 0.0);
  std::mt19937_64 rng(config_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto fill = [&](Seg s, double scale) {
    const Segment &seg = segments_[s];
    for (std::size_t i = 0; i < seg.size(); ++i)
      st.params[seg.offset + i] = scale * normal(rng);
  };
  const auto inv_sqrt = [](std::size_t n) { return 1.0 / std::sqrt(double(n)); };
  fill(kGlyph, config_.glyph_init_scale);
  fill(kProjW, inv_sqrt(config_.glyph_embed_dim));
  fill(kToken, config_.token_init_scale);
  fill(kKey, inv_sqrt(config_.projector_dim));
  fill(kValue, inv_sqrt(2 * config_.projector_dim));
  fill(kReadW, inv_sqrt(config_.key_dim));
  fill(kCtxW, inv_sqrt(config_.projector_dim));
  fill(kOutW, inv_sqrt(config_.decoder_hidden_dim));
  const Segment &wq = segments_[kQueryW];
  std::fill_n(st.params.begin() + wq.offset, wq.size() - 1, config_.query_prefix_init);
  st.params[wq.offset + wq.size() - 1] = 1.0;
  return st;
}

void ToyModel::check_state(const ModelState &state) const {
  if (state.params.size() != num_params_)
    throw ConfigError("state has " + std::to_string(state.params.size()) +
                      " parameters, model expects " + std::to_string(num_params_));
  for (std::size_t i = 0; i < state.params.size(); ++i)
    if (!std::isfinite(state.params[i]))
      throw NumericalError(parameter_name(i), "non-finite parameter");
}

VisualTokens ToyModel::encode_image(const GlyphImage &img,
                                    const ModelState &s) const {
  if (img.glyph_vocab_size() > config_.glyph_vocab_size)
    throw DomainError("image glyph vocabulary exceeds the model's");
  const auto P = bind(segments_, s.params.data());
  const std::size_t d = config_.glyph_embed_dim;
  std::vector<double> out;
  out.reserve(img.size() * d);
  for (int g : img.cells()) {
    if (g < 0 || g >= config_.glyph_vocab_size)
      throw DomainError("glyph id " + std::to_string(g) + " out of range");
    for (std::size_t c = 0; c < d; ++c) out.push_back(P.G(g, c));
  }
  return VisualTokens(d, std::move(out), false);
}

VisualTokens ToyModel::project(const VisualTokens &v, const ModelState &s) const {
  if (v.dim() != static_cast<std::size_t>(config_.glyph_embed_dim))
    throw ConfigError("project: input dim " + std::to_string(v.dim()) +
                      " != glyph_embed_dim " +
                      std::to_string(config_.glyph_embed_dim));
  const Engine eng(config_, segments_, s);
  return tokens_of(eng.project_rows(rows_of(v)), v.noisy());
}

SequenceDistribution ToyModel::decode_distributions(const VisualTokens &projected,
                                                    const Tokens &question,
                                                    TokenId bos,
                                                    const Tokens &gold,
                                                    const ModelState &s) const {
  if (projected.dim() != static_cast<std::size_t>(config_.projector_dim))
    throw ConfigError("decode: visual dim != projector_dim");
  const Engine eng(config_, segments_, s);
  eng.check_token(bos);
  for (TokenId t : gold) eng.check_token(t);
  const VisualTrace vt = eng.visual_from_projected(rows_of(projected));
  const HeadTrace h = eng.head(vt, question);
  std::vector<StepTrace> steps;
  Tokens prefix{bos};
  for (TokenId t : gold) {
    steps.push_back(eng.step(h, prefix));
    prefix.push_back(t);
  }
  return to_sequence(steps, gold);
}

Generation ToyModel::generate(const VisualTokens &projected,
                              const Tokens &question, TokenId bos,
                              const ModelState &s, int max_len) const {
  if (max_len <= 0) return {};
  if (projected.dim() != static_cast<std::size_t>(config_.projector_dim))
    throw ConfigError("generate: visual dim != projector_dim");
  const Engine eng(config_, segments_, s);
  eng.check_token(bos);
  const VisualTrace vt = eng.visual_from_projected(rows_of(projected));
  const HeadTrace h = eng.head(vt, question);
  std::vector<StepTrace> steps;
  Tokens prefix{bos};
  Tokens out;
  for (int i = 0; i < max_len; ++i) {
    steps.push_back(eng.step(h, prefix));
    Eigen::Index best = 0;
    steps.back().p.maxCoeff(&best);
    const auto tok = static_cast<TokenId>(best);
    out.push_back(tok);
    prefix.push_back(tok);
    if (tok == config_.eos) break;
  }
  Generation g;
  g.dist = to_sequence(steps, out);
  g.tokens = std::move(out);
  return g;
}

Generation ToyModel::answer(const GlyphImage &img, const Tokens &question,
                            TokenId bos, const ModelState &s) const {
  return generate(project(encode_image(img, s), s), question, bos, s,
                  config_.max_answer_len);
}

double ToyModel::glyph_embedding_stddev(const ModelState &s) const {
  const Segment &g = segments_[kGlyph];
  const Eigen::Map<const Vec> x(s.params.data() + g.offset,
                                static_cast<Eigen::Index>(g.size()));
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().mean());
}

DirectionalBatch ToyModel::forward_directions(const TrainingExample &ex,
                                              const ModelState &s,
                                              Trace *trace) const {
  if (ex.image == nullptr) throw DomainError("training example without image");
  const Engine eng(config_, segments_, s);
  for (int g : ex.image->cells())
    if (g < 0 || g >= config_.glyph_vocab_size)
      throw DomainError("glyph id " + std::to_string(g) + " out of range");
  VisualTrace vt = eng.visual_from_glyphs(ex.image->cells());
  DirectionalBatch batch;
  std::array<HeadTrace, 4> heads;
  for (Direction d : kDirections) {
    const Tokens &q = question_is_source(d) ? ex.question_src : ex.question_tgt;
    const Tokens &gold = answer_is_source(d) ? ex.gold_src : ex.gold_tgt;
    const TokenId bos = answer_is_source(d) ? config_.bos_src : config_.bos_tgt;
    for (TokenId t : gold) eng.check_token(t);
    HeadTrace h = eng.head(vt, q);
    Tokens prefix{bos};
    for (TokenId t : gold) {
      h.steps.push_back(eng.step(h, prefix));
      prefix.push_back(t);
    }
    batch[d] = {to_sequence(h.steps, gold), gold};
    heads[static_cast<std::size_t>(d)] = std::move(h);
  }
  if (trace) {
    trace->visual = std::move(vt);
    trace->heads = std::move(heads);
  }
  return batch;
}

void ToyModel::backward_directions(const TrainingExample &ex,
                                   const ModelState &s, const Trace &trace,
                                   const LogitGradients &g,
                                   std::span<double> grad) const {
  (void)ex;
  if (grad.size() != num_params_) throw ConfigError("gradient size mismatch");
  const Engine eng(config_, segments_, s);
  const auto &P = eng.params();
  auto D = bind(segments_, grad.data());
  const VisualTrace &vt = trace.visual;
  const Eigen::Index n = vt.v.rows();
  const Eigen::Index pd = config_.projector_dim;
  const double tau = config_.attention_scale;

  const auto embed_backward = [&](TokenId t, const Vec &demb) {
    if (eng.tied(t)) {
      const int gl = eng.tied_glyph(t);
      D.Wp.noalias() += demb * P.G.row(gl);
      D.bp += demb;
      D.G.row(gl).noalias() += (P.Wp.transpose() * demb).transpose();
    } else {
      D.T_.row(t) += demb.transpose();
    }
  };

  Mat du = Mat::Zero(n, config_.key_dim);
  Mat dkhat = Mat::Zero(n, config_.key_dim);
  for (Direction d : kDirections) {
    const HeadTrace &h = trace.heads[static_cast<std::size_t>(d)];
    const auto &dz_steps = g[d];
    if (dz_steps.size() != h.steps.size())
      throw AlignmentError("logit gradient length mismatch");
    Vec dr = Vec::Zero(config_.key_dim);
    for (std::size_t i = 0; i < h.steps.size(); ++i) {
      const StepTrace &st = h.steps[i];
      const Eigen::Map<const Vec> dz(dz_steps[i].data(),
                                     static_cast<Eigen::Index>(dz_steps[i].size()));
      D.O.noalias() += dz * st.h.transpose();
      D.bo += dz;
      const Vec dpre =
          ((P.O.transpose() * dz).array() * (1.0 - st.h.array().square())).matrix();
      D.Wr.noalias() += dpre * h.r.transpose();
      dr.noalias() += P.Wr.transpose() * dpre;
      D.Wc.noalias() += dpre * st.c.transpose();
      D.bh += dpre;
      const Vec dc = (P.Wc.transpose() * dpre) / static_cast<double>(st.prefix.size());
      for (TokenId t : st.prefix) embed_backward(t, dc);
    }
    du.noalias() += h.a * dr.transpose();
    const Vec da = vt.u * dr;
    const Vec ds = (h.a.array() * (da.array() - h.a.dot(da))).matrix();
    dkhat.noalias() += tau * ds * h.wtil.transpose();
    const Vec dwtil = tau * (vt.khat.transpose() * ds);
    const auto L = static_cast<Eigen::Index>(h.question.size());
    D.wq.head(L).noalias() += h.qv * dwtil;
    const Mat dqv = P.wq.head(L) * dwtil.transpose();
    D.A.noalias() += dqv.transpose() * h.qemb;
    const Mat dqemb = dqv * P.A;
    for (Eigen::Index t = 0; t < L; ++t)
      embed_backward(h.question[t], dqemb.row(t).transpose());
  }

  D.U.noalias() += du.transpose() * vt.m;
  const Mat dm = du * P.U;
  Mat dv = dm.leftCols(pd);
  if (n > 1) dv.bottomRows(n - 1) += dm.topRows(n - 1).rightCols(pd);
  const Vec proj = (vt.kraw.array() * dkhat.array()).rowwise().sum().matrix();
  const Mat dk =
      (dkhat.array().colwise() / vt.knorm.array()).matrix() -
      (vt.kraw.array().colwise() * (proj.array() / vt.knorm.array().cube())).matrix();
  D.A.noalias() += dk.transpose() * vt.v;
  dv.noalias() += dk * P.A;

  Mat e(n, config_.glyph_embed_dim);
  for (Eigen::Index j = 0; j < n; ++j) e.row(j) = P.G.row(vt.glyphs[j]);
  D.Wp.noalias() += dv.transpose() * e;
  D.bp += dv.colwise().sum().transpose();
  const Mat de = dv * P.Wp;
  for (Eigen::Index j = 0; j < n; ++j) D.G.row(vt.glyphs[j]) += de.row(j);
}

ToyProblem::ToyProblem(const ToyModel &model, ModelState &state,
                       std::vector<TrainingExample> examples)
    : model_(model), state_(state), examples_(std::move(examples)) {
  model_.check_state(state_);
  traces_.resize(examples_.size());
}

ToyProblem::~ToyProblem() = default;

DirectionalBatch ToyProblem::forward(std::size_t example) {
  auto &slot = traces_.at(example);
  if (!slot) slot = std::make_unique<ToyModel::Trace>();
  return model_.forward_directions(examples_[example], state_, slot.get());
}

void ToyProblem::backward(std::size_t example, const LogitGradients &g,
                          std::span<double> grad) {
  const auto &slot = traces_.at(example);
  if (!slot) throw DomainError("backward before forward");
  model_.backward_directions(examples_[example], state_, *slot, g, grad);
}

}  // namespace lingogap
