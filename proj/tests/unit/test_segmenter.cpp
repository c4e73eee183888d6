// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "graft/error.hpp"
#include "graft/segmenter.hpp"
#include "oracles.hpp"

using namespace graft;

namespace {

const std::string kMarker = "\xE2\x96\x81";

std::string m(const std::string& s) { return kMarker + s; }

// Every way of splitting text into vocabulary tokens.
void all_segmentations(const Vocabulary& v, const std::string& text, std::size_t pos, std::vector<std::string>& cur,
                       std::vector<std::vector<std::string>>& out) {
  if (pos == text.size()) {
    out.push_back(cur);
    return;
  }
  for (std::size_t len = 1; pos + len <= text.size(); ++len) {
    const auto piece = text.substr(pos, len);
    if (!v.contains(piece)) continue;
    cur.push_back(piece);
    all_segmentations(v, text, pos + len, cur, out);
    cur.pop_back();
  }
}

}  // namespace

TEST_CASE("greedy longest-prefix segmentation") {
  SUBCASE("unbelievable") {
    const auto seg = Segmenter::greedy(Vocabulary({m("un"), "believ", "able"}));
    CHECK(seg.segment("unbelievable") == std::vector<std::string>{m("un"), "believ", "able"});
  }
  SUBCASE("no prefix match skips the word") {
    const auto seg = Segmenter::greedy(Vocabulary({m("a")}));
    CHECK(seg.segment("xyz").empty());
    CHECK(seg.segment_ids("xyz").empty());
  }
  SUBCASE("longest prefix wins") {
    const Vocabulary v({m("ab"), m("abc"), "d"});
    const auto seg = Segmenter::greedy(v);
    const auto got = seg.segment("abcd");
    CHECK(got == std::vector<std::string>{m("abc"), "d"});

    // Enumerate every segmentation; greedy must pick the one whose first
    // piece is longest among those that complete.
    std::vector<std::vector<std::string>> all;
    std::vector<std::string> cur;
    all_segmentations(v, m("abcd"), 0, cur, all);
    REQUIRE(all.size() == 1);
    CHECK(all[0] == got);
  }
  SUBCASE("greedy can strand a word a different split would cover") {
    // "▁ab" + "c" would work, but greedy commits to "▁abc" and then fails on "x".
    const auto seg = Segmenter::greedy(Vocabulary({m("ab"), m("abc"), "cx"}));
    CHECK(seg.segment("abcx").empty());
  }
  SUBCASE("empty word") { CHECK(Segmenter::greedy(Vocabulary({m("a")})).segment("").empty()); }
  SUBCASE("custom marker") {
    const auto seg = Segmenter::greedy(Vocabulary({"##ab", "c"}), "##");
    CHECK(seg.segment("abc") == std::vector<std::string>{"##ab", "c"});
  }
  SUBCASE("multi-byte characters") {
    const auto seg = Segmenter::greedy(Vocabulary({m("\xC3\xA9t\xC3\xA9"), "s"}));
    CHECK(seg.segment("\xC3\xA9t\xC3\xA9s") == std::vector<std::string>{m("\xC3\xA9t\xC3\xA9"), "s"});
  }
}

TEST_CASE("property: greedy output is sound, in-vocabulary, deterministic and matches the naive oracle") {
  oracle::Rng rng(11);
  const std::string alphabet = "abcde";
  std::uniform_int_distribution<int> len(1, 4), pick(0, 4), count(3, 25);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> tokens;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      std::string t;
      for (int j = len(rng); j > 0; --j) t += alphabet[pick(rng)];
      if (i % 3 == 0) t = kMarker + t;
      if (std::find(tokens.begin(), tokens.end(), t) == tokens.end()) tokens.push_back(t);
    }
    const Vocabulary v(tokens);
    const auto seg = Segmenter::greedy(v);
    for (int w = 0; w < 20; ++w) {
      std::string word;
      for (int j = len(rng) + len(rng); j > 0; --j) word += alphabet[pick(rng)];
      const auto ids = seg.segment_ids(word);
      REQUIRE(ids == oracle::greedy_segment(v, kMarker, word));
      REQUIRE(ids == seg.segment_ids(word));
      if (ids.empty()) continue;
      std::string joined;
      for (auto id : ids) joined += v.token(id);
      REQUIRE(joined.rfind(kMarker, 0) == 0);
      CHECK(joined.substr(kMarker.size()) == word);
    }
  }
}

TEST_CASE("external segmentation table") {
  SUBCASE("parse") {
    const auto table = parse_external_segmentations("cat\t" + m("ca") + " t\n");
    REQUIRE(table.count("cat") == 1);
    CHECK(table.at("cat") == std::vector<std::string>{m("ca"), "t"});
  }
  SUBCASE("later duplicates win") {
    const auto table = parse_external_segmentations("cat\ta\ncat\tb c\n");
    CHECK(table.at("cat") == std::vector<std::string>{"b", "c"});
  }
  SUBCASE("empty piece list") {
    const auto table = parse_external_segmentations("dog\t\n");
    CHECK(table.at("dog").empty());
  }
  SUBCASE("malformed line names the line") {
    try {
      parse_external_segmentations("cat\ta\nnotab\n", "seg.tsv");
      FAIL("no error");
    } catch (const FormatError& e) {
      CHECK(e.location() == 2);
      CHECK(e.unit() == FormatError::Unit::line);
    }
  }
  SUBCASE("segmenter in external mode") {
    const Vocabulary v({m("ca"), "t"});
    const auto seg = Segmenter::external(v, parse_external_segmentations("cat\t" + m("ca") + " t\ncot\t" + m("co") + " t\n"));
    CHECK(seg.segment("cat") == std::vector<std::string>{m("ca"), "t"});
    CHECK(seg.segment("dog").empty());
    // Pieces the vocabulary lacks are dropped from the id form.
    CHECK(seg.segment_ids("cot") == std::vector<std::size_t>{1});
  }
}
