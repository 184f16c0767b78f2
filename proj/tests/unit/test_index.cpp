#include <cstring>
#include <random>
#include <set>

#include "baleen/index.hpp"
#include "baleen/retriever.hpp"
#include "baleen/util.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "support.hpp"

using namespace baleen;

TEST_CASE("flat index layout") {
  const Corpus c({{"a", "x", {"b c d."}}, {"b", "y", {"e f g."}}, {"c", "z", {"h i j."}}});
  LexicalEncoder enc(testing::enc_cfg(16));
  const auto idx = build_index(c, enc, {});
  CHECK(idx.total_vectors() == 12);
  CHECK(idx.passage_count() == 3);
  CHECK(idx.rows_of(1) == std::make_pair<std::size_t, std::size_t>(4, 8));
  for (std::size_t r = 0; r < 12; ++r) CHECK(idx.slot_of_vector(r) == r / 4);
  CHECK(idx.variant() == IndexVariant::Flat);
}

TEST_CASE("ivf assigns every vector to its nearest centroid") {
  const Corpus c(testing::word_corpus(100, 9, 1));
  LexicalEncoder enc(testing::enc_cfg(16));
  IndexConfig cfg;
  cfg.variant = IndexVariant::Ivf;
  cfg.centroid_count = 4;
  cfg.seed = 3;
  const auto idx = build_index(c, enc, cfg);
  REQUIRE(idx.total_vectors() == 1000);
  const auto cent = idx.centroids();
  const auto all = idx.all_vectors();
  std::size_t listed = 0;
  for (std::size_t r = 0; r < 1000; ++r) {
    std::vector<double> sims;
    for (std::size_t k = 0; k < 4; ++k) {
      double s = 0;
      for (std::size_t d = 0; d < 16; ++d) s += double(all.row(r)[d]) * cent.row(k)[d];
      sims.push_back(s);
    }
    const double best = *std::max_element(sims.begin(), sims.end());
    CHECK(sims[idx.assignment(r)] >= best - 1e-6);
  }
  for (std::size_t k = 0; k < 4; ++k) listed += idx.inverted_list(k).size();
  CHECK(listed == 1000);
}

TEST_CASE("too many centroids is an error") {
  const Corpus c({{"a", "x", {"b."}}});
  LexicalEncoder enc(testing::enc_cfg(16));
  IndexConfig cfg;
  cfg.variant = IndexVariant::Ivf;
  cfg.centroid_count = 5;
  CHECK_THROWS_AS(build_index(c, enc, cfg), Error);
  CHECK_THROWS_AS(build_index(Corpus{}, enc, {}), Error);
}

TEST_CASE("candidate search") {
  const Corpus c(testing::word_corpus(60, 8, 2));
  LexicalEncoder enc(testing::enc_cfg(32));
  const auto flat = build_index(c, enc, {});

  SUBCASE("a stored vector finds its own passage") {
    EncodedQuery eq;
    // Title tokens t0..t59 are unique per passage.
    eq.query_part = enc.encode_tokens(std::vector<std::string>{"t17"});
    eq.fact_part = TokenMatrix(0, 32);
    const auto cs = candidates_for(eq, flat, 1, CandidateSource::QueryOnly);
    REQUIRE(cs.size() == 1);
    CHECK(cs.pids(flat) == std::vector<std::string>{c.at(17).pid});
  }
  SUBCASE("exhaustive depth reaches every passage") {
    const auto eq = enc.encode_query({"q", testing::word_query(5, 3), {}, 0});
    const auto cs = candidates_for(eq, flat, flat.total_vectors(), CandidateSource::QueryOnly);
    CHECK(cs.size() == c.size());
  }
  SUBCASE("probing every list equals flat search") {
    IndexConfig cfg;
    cfg.variant = IndexVariant::Ivf;
    cfg.centroid_count = 8;
    cfg.nprobe = 8;
    const auto ivf = build_index(c, enc, cfg);
    for (std::uint64_t s = 0; s < 10; ++s) {
      MultiHopQuery q{"q", testing::word_query(6, 100 + s), {{"p", 0, testing::word_query(4, 200 + s), 0, {}}}, 1};
      const auto eq = enc.encode_query(q);
      for (auto src : {CandidateSource::QueryOnly, CandidateSource::QueryAndFacts}) {
        CHECK(candidates_for(eq, ivf, 7, src).hits == candidates_for(eq, flat, 7, src).hits);
      }
    }
  }
  SUBCASE("dimension mismatch") {
    EncodedQuery eq;
    eq.query_part = TokenMatrix(1, 16);
    CHECK_THROWS_AS(candidates_for(eq, flat, 4, CandidateSource::QueryOnly), Error);
  }
}

TEST_CASE("top_vectors ties go to the lower index") {
  const std::vector<float> s{0.5f, 0.9f, 0.5f, 0.9f, 0.1f};
  auto got = top_vectors(s, 3);
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<std::uint32_t>{0, 1, 3});
  CHECK(top_vectors(s, 10).size() == 5);
}

TEST_CASE("index file round trip") {
  testing::TempDir dir("index");
  const Corpus c({{"a", "x", {"b c d."}}, {"b", "y", {"e f g."}}, {"c", "z", {"h i j."}}});
  LexicalEncoder enc(testing::enc_cfg(16));
  const auto idx = build_index(c, enc, {});
  save_index(idx, dir.file("i.idx"));
  const auto back = load_index(dir.file("i.idx"));
  const auto eq = enc.encode_query({"q", "b f j", {}, 0});
  CHECK(candidates_for(eq, back, 2, CandidateSource::QueryOnly).hits ==
        candidates_for(eq, idx, 2, CandidateSource::QueryOnly).hits);
  CHECK(serialize_index(back) == serialize_index(idx));

  const auto bytes = read_file(dir.file("i.idx"));
  write_file(dir.file("short.idx"), bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_index(dir.file("short.idx")), Error);
  write_file(dir.file("magic.idx"), "XXXXXX" + bytes.substr(6));
  CHECK_THROWS_AS(load_index(dir.file("magic.idx")), Error);
}

TEST_CASE("ivf round trip keeps centroids bit-exact") {
  testing::TempDir dir("ivf");
  const Corpus c(testing::word_corpus(40, 6, 5));
  LexicalEncoder enc(testing::enc_cfg(16));
  IndexConfig cfg;
  cfg.variant = IndexVariant::Ivf;
  cfg.centroid_count = 6;
  cfg.nprobe = 2;
  const auto idx = build_index(c, enc, cfg);
  save_index(idx, dir.file("i.idx"));
  const auto back = load_index(dir.file("i.idx"));
  CHECK(back.centroid_count() == 6);
  CHECK(back.nprobe() == 2);
  CHECK(std::memcmp(back.centroids().data, idx.centroids().data, 6 * 16 * sizeof(float)) == 0);
}

TEST_CASE("index build is reproducible") {
  const Corpus c(testing::word_corpus(40, 6, 5));
  LexicalEncoder enc(testing::enc_cfg(16));
  IndexConfig cfg;
  cfg.variant = IndexVariant::Ivf;
  cfg.centroid_count = 6;
  cfg.seed = 12;
  auto one = cfg, many = cfg;
  many.threads = 4;
  CHECK(serialize_index(build_index(c, enc, one)) == serialize_index(build_index(c, enc, many)));
}
