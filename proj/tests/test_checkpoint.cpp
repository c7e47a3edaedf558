#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dsner/conll.hpp"
#include "dsner/errors.hpp"
#include "dsner/model.hpp"
#include "support.hpp"

using namespace dsner;

namespace {

Model sample_model() {
  Model m;
  m.types = EntityTypeSet({"LOC", "ORG", "PER"});
  for (const char* w : {"Anna", "in", "Kelso", "ünïcode"}) m.vocab.add(w);
  m.config.vocab_size = m.vocab.size();
  m.config.num_labels = m.types.size();
  m.config.embed_dim = 3;
  m.config.context_dim = 5;
  m.config.width_dim = 2;
  m.config.hidden = 7;
  m.config.dropout = 0.3;
  m.config.max_span_width = 4;
  m.config.seed = 17;
  m.params = init_parameters(m.config);
  return m;
}

}  // namespace

TEST_CASE("checkpoint round trip") {
  const auto dir = testing::scratch_dir("ckpt");
  const auto path = (dir / "m.bin").string();
  const auto m = sample_model();
  save_checkpoint(path, m);
  CHECK(read_text_file(path).substr(0, 6) == "DSNER1");
  const auto back = load_checkpoint(path);
  CHECK(back.params.same_values(m.params));
  CHECK(back.vocab.words() == m.vocab.words());
  CHECK(back.types == m.types);
  CHECK(back.config.max_span_width == 4);
  CHECK(back.config.dropout == 0.3);
  CHECK(back.config.hidden == 7);

  save_checkpoint(path, back);
  CHECK(load_checkpoint(path).params.same_values(m.params));
}

TEST_CASE("broken checkpoints are artifact mismatches") {
  const auto dir = testing::scratch_dir("ckpt-bad");
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.bin").string()), ArtifactMismatch);

  const auto path = (dir / "m.bin").string();
  save_checkpoint(path, sample_model());
  const std::string bytes = read_text_file(path);

  write_text_file(path, bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(path), ArtifactMismatch);

  write_text_file(path, "NOTDSN" + bytes.substr(6));
  CHECK_THROWS_AS(load_checkpoint(path), ArtifactMismatch);

  write_text_file(path, bytes + "x");
  CHECK_THROWS_AS(load_checkpoint(path), ArtifactMismatch);

  write_text_file(path, "");
  CHECK_THROWS_AS(load_checkpoint(path), ArtifactMismatch);
}
