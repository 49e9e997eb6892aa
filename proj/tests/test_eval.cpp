#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "seglid/eval.hpp"

using namespace seglid;

namespace {

SegmentedToken tok(std::string surface, std::vector<Segment> segs) {
  return SegmentedToken{std::move(surface), std::move(segs)};
}

Corpus corpus_of(std::vector<SegmentedToken> toks) {
  Corpus c;
  c.sentences.push_back(Sentence{std::move(toks), ""});
  return c;
}

}  // namespace

TEST_CASE("precision, recall, f1 from match counts") {
  Prf a = prf(MatchCounts{4, 2, 1});
  REQUIRE(a.p == 0.5);
  REQUIRE(a.r == 0.25);
  REQUIRE(a.f1 == Catch::Approx(1.0 / 3.0).epsilon(1e-15));

  Prf b = prf(MatchCounts{2, 1, 0});
  REQUIRE(b.p == 0.0);
  REQUIRE(b.r == 0.0);
  REQUIRE(b.f1 == 0.0);

  Prf c = prf(MatchCounts{0, 0, 0});  // zero denominators stay zero
  REQUIRE(c.p == 0.0);
  REQUIRE(c.r == 0.0);
  REQUIRE(c.f1 == 0.0);

  Prf d = prf(MatchCounts{3, 3, 3});
  REQUIRE(d.p == 1.0);
  REQUIRE(d.r == 1.0);
  REQUIRE(d.f1 == 1.0);
}

TEST_CASE("segment matching modes") {
  SegmentedToken gold = tok("Schatzym", {{0, 7, "DE"}, {7, 8, "TR"}});
  SECTION("boundary off by one misses both segments") {
    SegmentedToken pred = tok("Schatzym", {{0, 6, "DE"}, {6, 8, "TR"}});
    MatchCounts c = match_segments(gold, pred, MatchMode::kBoundary);
    REQUIRE(c.n_gold == 2);
    REQUIRE(c.n_pred == 2);
    REQUIRE(c.n_correct == 0);
  }
  SECTION("boundary matching ignores labels, labeled matching does not") {
    SegmentedToken pred = tok("Schatzym", {{0, 7, "TR"}, {7, 8, "DE"}});  // swapped tags
    REQUIRE(match_segments(gold, pred, MatchMode::kBoundary).n_correct == 2);
    REQUIRE(match_segments(gold, pred, MatchMode::kBoundaryAndLabel).n_correct == 0);
  }
  SECTION("partial credit counts matching spans only") {
    SegmentedToken pred = tok("Schatzym", {{0, 7, "DE"}, {7, 8, "DE"}});
    REQUIRE(match_segments(gold, pred, MatchMode::kBoundaryAndLabel).n_correct == 1);
  }
  SECTION("surface mismatch is an error") {
    REQUIRE_THROWS_AS(match_segments(gold, tok("Schatz", {{0, 6, "DE"}}), MatchMode::kBoundary),
                      std::invalid_argument);
  }
}

TEST_CASE("character accuracy") {
  SECTION("worked example: one of eight characters mistagged") {
    TokenPairs pairs;
    SegmentedToken g = tok("Schatzym", {{0, 7, "DE"}, {7, 8, "TR"}});
    SegmentedToken p = tok("Schatzym", {{0, 6, "DE"}, {6, 8, "TR"}});
    pairs.emplace_back(&g, &p);
    REQUIRE(char_accuracy(pairs) == 0.875);
  }
  SECTION("counts characters, not tokens") {
    SegmentedToken g1 = tok("ab", {{0, 2, "DE"}});
    SegmentedToken p1 = tok("ab", {{0, 2, "TR"}});  // 0/2
    SegmentedToken g2 = tok("kitaplar", {{0, 8, "TR"}});
    SegmentedToken p2 = tok("kitaplar", {{0, 8, "TR"}});  // 8/8
    TokenPairs pairs{{&g1, &p1}, {&g2, &p2}};
    REQUIRE(char_accuracy(pairs) == 0.8);
  }
  SECTION("invariant under re-splitting with identical tags") {
    SegmentedToken g = tok("abcd", {{0, 2, "DE"}, {2, 4, "TR"}});
    SegmentedToken p1 = tok("abcd", {{0, 4, "DE"}});
    SegmentedToken p2 = tok("abcd", {{0, 1, "DE"}, {1, 4, "DE"}});  // same char tags
    TokenPairs a{{&g, &p1}}, b{{&g, &p2}};
    REQUIRE(char_accuracy(a) == char_accuracy(b));
  }
  SECTION("empty input") { REQUIRE(char_accuracy(TokenPairs{}) == 0.0); }
}

TEST_CASE("labeled match never beats boundary match") {
  Rng rng(9201);
  const std::vector<std::string> tags{"DE", "TR", "WIX"};
  auto random_split = [&](int n) {
    std::vector<Segment> segs;
    int at = 0;
    std::string prev;
    while (at < n) {
      int len = 1 + static_cast<int>(rng.next_int(n - at));
      std::string t;
      do {
        t = tags[rng.next_int(3)];
      } while (t == prev);
      segs.push_back(Segment{at, at + len, t});
      prev = t;
      at += len;
    }
    return segs;
  };
  for (int it = 0; it < 300; ++it) {
    int n = 1 + static_cast<int>(rng.next_int(9));
    std::string surface(n, 'a');
    SegmentedToken g = tok(surface, random_split(n));
    SegmentedToken p = tok(surface, random_split(n));
    MatchCounts mb = match_segments(g, p, MatchMode::kBoundary);
    MatchCounts ml = match_segments(g, p, MatchMode::kBoundaryAndLabel);
    REQUIRE(ml.n_correct <= mb.n_correct);
    REQUIRE(mb.n_correct <= std::min(mb.n_gold, mb.n_pred));
    Prf pb = prf(mb), pl = prf(ml);
    REQUIRE(pl.f1 <= pb.f1 + 1e-15);
    REQUIRE(pb.f1 <= 1.0);
  }
}

TEST_CASE("corpus alignment") {
  TagSet tags({"DE", "TR"}, {});
  Corpus gold = parse_corpus("ab\ta|b\tDE|TR\ncd\tcd\tDE\n\nxy\txy\tTR\n\n", tags);
  SECTION("pairs walk sentences in order") {
    TokenPairs pairs = aligned_tokens(gold, gold);
    REQUIRE(pairs.size() == 3);
    REQUIRE(pairs[0].first->surface == "ab");
    REQUIRE(pairs[2].second->surface == "xy");
  }
  SECTION("sentence count mismatch") {
    Corpus pred = parse_corpus("ab\ta|b\tDE|TR\ncd\tcd\tDE\n\n", tags);
    REQUIRE_THROWS_AS(aligned_tokens(gold, pred), std::invalid_argument);
  }
  SECTION("token count mismatch names the sentence") {
    Corpus pred = parse_corpus("ab\ta|b\tDE|TR\n\nxy\txy\tTR\n\n", tags);
    try {
      aligned_tokens(gold, pred);
      FAIL();
    } catch (const std::invalid_argument& e) {
      REQUIRE(std::string(e.what()).find("sentence 1") != std::string::npos);
    }
  }
  SECTION("surface mismatch names the token") {
    Corpus pred = parse_corpus("ab\ta|b\tDE|TR\nce\tce\tDE\n\nxy\txy\tTR\n\n", tags);
    try {
      aligned_tokens(gold, pred);
      FAIL();
    } catch (const std::invalid_argument& e) {
      REQUIRE(std::string(e.what()).find("token 2") != std::string::npos);
    }
  }
  SECTION("gold-mixed restriction ignores predicted-mixed unmixed-gold tokens") {
    Corpus pred = corpus_of({tok("ab", {{0, 1, "DE"}, {1, 2, "TR"}}),
                             tok("cd", {{0, 1, "DE"}, {1, 2, "TR"}}),  // spurious split
                             tok("xy", {{0, 2, "TR"}})});
    Corpus gold2 = corpus_of({tok("ab", {{0, 1, "DE"}, {1, 2, "TR"}}), tok("cd", {{0, 2, "DE"}}),
                              tok("xy", {{0, 2, "TR"}})});
    TokenPairs mixed = mixed_only(aligned_tokens(gold2, pred));
    REQUIRE(mixed.size() == 1);
    REQUIRE(mixed[0].first->surface == "ab");
  }
}

TEST_CASE("confusion matrix") {
  Corpus gold = corpus_of({tok("aa", {{0, 2, "DE"}}), tok("bb", {{0, 2, "DE"}}),
                           tok("cc", {{0, 1, "DE"}, {1, 2, "TR"}}), tok("dd", {{0, 2, "TR"}})});
  Corpus pred = corpus_of({tok("aa", {{0, 2, "DE"}}), tok("bb", {{0, 2, "TR"}}),
                           tok("cc", {{0, 1, "DE"}, {1, 2, "TR"}}), tok("dd", {{0, 2, "TR"}})});
  ConfusionMatrix m = confusion_matrix(aligned_tokens(gold, pred));
  REQUIRE(m.tags == std::vector<std::string>{"DE", "DE_TR", "TR"});
  // columns are gold composed tags; column totals equal gold frequencies
  REQUIRE(m.column_total(0) == 2);  // DE
  REQUIRE(m.column_total(1) == 1);  // DE_TR
  REQUIRE(m.column_total(2) == 1);  // TR
  REQUIRE(m.counts[0][0] == 1);     // DE predicted as DE
  REQUIRE(m.counts[2][0] == 1);     // DE predicted as TR
  REQUIRE(m.counts[1][1] == 1);
  REQUIRE(m.counts[2][2] == 1);
  REQUIRE(m.normalized(0, 0) == 0.5);
  REQUIRE(m.normalized(2, 0) == 0.5);
  REQUIRE(m.normalized(1, 1) == 1.0);
  REQUIRE(m.normalized(0, 1) == 0.0);
  std::string csv = m.render_csv();
  REQUIRE(csv.find("pred\\gold,DE,DE_TR,TR\n") == 0);
  REQUIRE(csv.find("counts\\gold,DE,DE_TR,TR\n") != std::string::npos);
  REQUIRE(csv.find("DE,0.50,0.00,0.00") != std::string::npos);
  REQUIRE(csv.find("DE,1,0,0") != std::string::npos);
}

TEST_CASE("segmentation error rates") {
  Corpus gold = corpus_of({tok("aa", {{0, 2, "DE"}}), tok("bb", {{0, 1, "DE"}, {1, 2, "TR"}}),
                           tok("cc", {{0, 2, "DE"}})});
  Corpus pred = corpus_of({tok("aa", {{0, 1, "DE"}, {1, 2, "TR"}}),  // over
                           tok("bb", {{0, 2, "DE"}}),                // under
                           tok("cc", {{0, 2, "TR"}})});              // equal count
  auto [over, under] = seg_error_rates(aligned_tokens(gold, pred));
  REQUIRE(over == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
  REQUIRE(under == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
  auto [o2, u2] = seg_error_rates(TokenPairs{});
  REQUIRE(o2 == 0.0);
  REQUIRE(u2 == 0.0);
}

TEST_CASE("full report") {
  TagSet tags({"DE", "TR"}, {});
  Corpus gold = parse_corpus("ab\ta|b\tDE|TR\ncd\tcd\tDE\n\nxy\txy\tTR\n\n", tags);

  SECTION("perfect prediction is all ones and zeros") {
    EvalReport r = evaluate(gold, gold);
    for (double v : {r.seg.p, r.seg.r, r.seg.f1, r.tag.p, r.tag.r, r.tag.f1, r.char_acc, r.mixed_seg.f1,
                     r.mixed_tag.f1, r.mixed_char_acc})
      REQUIRE(v == 1.0);
    REQUIRE(r.overseg == 0.0);
    REQUIRE(r.underseg == 0.0);
    REQUIRE(!r.mixed_empty);
    REQUIRE(r.n_tokens == 3);
    REQUIRE(r.n_mixed_tokens == 1);
    for (size_t p = 0; p < r.confusion.tags.size(); ++p)
      for (size_t g = 0; g < r.confusion.tags.size(); ++g)
        REQUIRE(r.confusion.counts[p][g] == (p == g ? r.confusion.column_total(g) : 0));
    std::string text = r.render_text("segrnn");
    REQUIRE(text.find("scope        Seg-P   Seg-R   Seg-F1  Tag-P   Tag-R   Tag-F1  CharAcc\n") == 0);
    REQUIRE(text.find("system segrnn | tokens 3 | gold-mixed 1") != std::string::npos);
    REQUIRE(text.find("diagnostics:") == std::string::npos);
    std::string csv = r.render_csv("segrnn");
    REQUIRE(csv.find("system,scope,") == 0);
    REQUIRE(csv.find("segrnn,all,1.000000,") != std::string::npos);
    REQUIRE(csv.find("segrnn,mixed_only,1.000000,") != std::string::npos);
  }
  SECTION("known error pattern") {
    Corpus pred = parse_corpus("ab\tab\tDE\ncd\tcd\tDE\n\nxy\txy\tDE\n\n", tags);
    EvalReport r = evaluate(gold, pred);
    // segments: gold 4, pred 3, matching spans: cd, xy (boundary) -> P 2/3 R 1/2
    REQUIRE(r.seg.p == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
    REQUIRE(r.seg.r == 0.5);
    // labeled: xy predicted DE but gold TR -> only cd matches
    REQUIRE(r.tag.p == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    REQUIRE(r.tag.r == 0.25);
    // chars: ab -> a correct b wrong; cd both; xy none = 3/6
    REQUIRE(r.char_acc == 0.5);
    // the one mixed token was merged: undersegmentation 1/3
    REQUIRE(r.underseg == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    REQUIRE(r.overseg == 0.0);
    REQUIRE(r.mixed_seg.f1 == 0.0);
    REQUIRE(r.n_mixed_tokens == 1);
  }
  SECTION("no gold-mixed tokens zeroes the mixed block") {
    Corpus g2 = parse_corpus("cd\tcd\tDE\n\n", tags);
    EvalReport r = evaluate(g2, g2);
    REQUIRE(r.mixed_empty);
    REQUIRE(r.mixed_seg.f1 == 0.0);
    REQUIRE(r.mixed_char_acc == 0.0);
    REQUIRE(r.render_text("x").find("(none: metrics 0)") != std::string::npos);
  }
  SECTION("diagnostics propagate into the report") {
    PipelineDiagnostics diag;
    diag.fallback_overlong_tag = 2;
    diag.collapsed_invalid = 5;
    EvalReport r = evaluate(gold, gold, &diag);
    REQUIRE(r.diagnostics.fallback_overlong_tag == 2);
    std::string text = r.render_text("crf_pipeline");
    REQUIRE(text.find("diagnostics: overlong-tag fallbacks 2 | collapsed outputs 5") !=
            std::string::npos);
  }
}
