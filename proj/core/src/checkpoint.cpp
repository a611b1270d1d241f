// SPDX-License-Identifier: Apache-2.0
#include "lingogap/checkpoint.hpp"

#include "json_util.hpp"
#include "lingogap/record.hpp"

namespace lingogap {

using json = nlohmann::ordered_json;

namespace {

json config_json(const ModelConfig &c) {
  json j;
  j["glyph_vocab_size"] = c.glyph_vocab_size;
  j["glyph_embed_dim"] = c.glyph_embed_dim;
  j["projector_dim"] = c.projector_dim;
  j["key_dim"] = c.key_dim;
  j["decoder_hidden_dim"] = c.decoder_hidden_dim;
  j["vocab_size"] = c.vocab_size;
  j["max_question_len"] = c.max_question_len;
  j["max_answer_len"] = c.max_answer_len;
  j["bos_src"] = c.bos_src;
  j["bos_tgt"] = c.bos_tgt;
  j["eos"] = c.eos;
  j["tied_token_begin"] = c.tied_token_begin;
  j["tied_token_count"] = c.tied_token_count;
  j["tied_glyph_begin"] = c.tied_glyph_begin;
  j["attention_scale"] = c.attention_scale;
  j["glyph_init_scale"] = c.glyph_init_scale;
  j["token_init_scale"] = c.token_init_scale;
  j["query_prefix_init"] = c.query_prefix_init;
  j["seed"] = c.seed;
  return j;
}

ModelConfig config_from(const json &j) {
  ModelConfig c;
  using detail::get_or;
  c.glyph_vocab_size = get_or(j, "glyph_vocab_size", c.glyph_vocab_size);
  c.glyph_embed_dim = get_or(j, "glyph_embed_dim", c.glyph_embed_dim);
  c.projector_dim = get_or(j, "projector_dim", c.projector_dim);
  c.key_dim = get_or(j, "key_dim", c.key_dim);
  c.decoder_hidden_dim = get_or(j, "decoder_hidden_dim", c.decoder_hidden_dim);
  c.vocab_size = get_or(j, "vocab_size", c.vocab_size);
  c.max_question_len = get_or(j, "max_question_len", c.max_question_len);
  c.max_answer_len = get_or(j, "max_answer_len", c.max_answer_len);
  c.bos_src = get_or(j, "bos_src", c.bos_src);
  c.bos_tgt = get_or(j, "bos_tgt", c.bos_tgt);
  c.eos = get_or(j, "eos", c.eos);
  c.tied_token_begin = get_or(j, "tied_token_begin", c.tied_token_begin);
  c.tied_token_count = get_or(j, "tied_token_count", c.tied_token_count);
  c.tied_glyph_begin = get_or(j, "tied_glyph_begin", c.tied_glyph_begin);
  c.attention_scale = get_or(j, "attention_scale", c.attention_scale);
  c.glyph_init_scale = get_or(j, "glyph_init_scale", c.glyph_init_scale);
  c.token_init_scale = get_or(j, "token_init_scale", c.token_init_scale);
  c.query_prefix_init = get_or(j, "query_prefix_init", c.query_prefix_init);
  c.seed = get_or(j, "seed", c.seed);
  c.validate();
  return c;
}

}  // namespace

std::string model_config_to_json(const ModelConfig &c) {
  return config_json(c).dump();
}

ModelConfig model_config_from_json(std::string_view text) {
  return config_from(detail::parse_record(text));
}

std::string checkpoint_to_json(const ToyModel &model, const ModelState &state) {
  model.check_state(state);
  json j;
  j["v"] = kCheckpointVersion;
  j["kind"] = "lingogap.checkpoint";
  j["config"] = config_json(model.config());
  j["step"] = state.step;
  json segs = json::array();
  for (const auto &s : model.segments()) {
    json seg;
    seg["name"] = s.name;
    seg["rows"] = s.rows;
    seg["cols"] = s.cols;
    seg["values"] = std::vector<double>(state.params.begin() + s.offset,
                                        state.params.begin() + s.offset + s.size());
    segs.push_back(std::move(seg));
  }
  j["segments"] = std::move(segs);
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  const json j = detail::parse_record(text);
  if (detail::get<int>(j, "v") != kCheckpointVersion)
    throw InvariantError("v", "unsupported checkpoint version");
  if (detail::get<std::string>(j, "kind") != "lingogap.checkpoint")
    throw InvariantError("kind", "not a lingogap checkpoint");
  Checkpoint ck{config_from(detail::field(j, "config")), {}};
  const ToyModel model(ck.config);
  ck.state.step = detail::get<std::uint64_t>(j, "step");
  ck.state.params.assign(model.num_parameters(), 0.0);
  const json &segs = detail::field(j, "segments");
  if (!segs.is_array() || segs.size() != model.segments().size())
    throw InvariantError("segments", "segment count does not match the model");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Segment &want = model.segments()[i];
    const auto name = detail::get<std::string>(segs[i], "name");
    if (name != want.name)
      throw InvariantError("segments", "expected segment '" + want.name +
                                           "', found '" + name + "'");
    const auto rows = detail::get<std::size_t>(segs[i], "rows");
    const auto cols = detail::get<std::size_t>(segs[i], "cols");
    const auto values = detail::get<std::vector<double>>(segs[i], "values");
    if (rows != want.rows || cols != want.cols || values.size() != want.size())
      throw InvariantError("segments", "shape mismatch in '" + name + "'");
    std::copy(values.begin(), values.end(), ck.state.params.begin() + want.offset);
  }
  model.check_state(ck.state);
  return ck;
}

void save_checkpoint(const std::filesystem::path &path, const ToyModel &model,
                     const ModelState &state) {
  write_text_file(path, checkpoint_to_json(model, state));
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  return checkpoint_from_json(read_text_file(path));
}

}  // namespace lingogap
