#include <random>
#include <sstream>

#include "doctest.h"
#include "modnet/layout.hpp"

using namespace modnet;

namespace {

DepToken tok(int index, std::string form, int head, std::string rel, Pos pos) {
    return DepToken{index, std::move(form), head, std::move(rel), pos};
}

// "what is this person playing": playing is the root, person hangs off it.
std::vector<DepToken> person_playing_parse() {
    return {
        tok(1, "what", 5, "dobj", Pos::kWh),     tok(2, "is", 5, "aux", Pos::kOther),
        tok(3, "this", 4, "det", Pos::kOther),   tok(4, "person", 5, "nsubj", Pos::kNoun),
        tok(5, "playing", 0, "root", Pos::kVerb),
    };
}

// "how many planes are flying": how attaches to the verbal root.
std::vector<DepToken> planes_flying_parse() {
    return {
        tok(1, "how", 5, "advmod", Pos::kWh),     tok(2, "many", 3, "amod", Pos::kOther),
        tok(3, "planes", 5, "nsubj", Pos::kNoun), tok(4, "are", 5, "aux", Pos::kOther),
        tok(5, "flying", 0, "root", Pos::kVerb),
    };
}

Layout random_layout(std::mt19937_64& rng, int depth) {
    static const std::vector<std::string> words = {"person", "dog", "pizza", "sign", "tree"};
    const int pick = depth > 2 ? 0 : static_cast<int>(rng() % 3);
    if (pick == 0) return Layout{ModuleKind::kFind, words[rng() % words.size()], {}};
    Layout node{ModuleKind::kAnd, "", {}};
    node.children.push_back(random_layout(rng, depth + 1));
    node.children.push_back(random_layout(rng, depth + 1));
    return node;
}

Layout random_root(std::mt19937_64& rng) {
    Layout root{rng() % 2 ? ModuleKind::kDescribe : ModuleKind::kMeasure, "", {}};
    root.children.push_back(random_layout(rng, 1));
    return root;
}

}  // namespace

TEST_CASE("parse_layout on canonical strings") {
    Layout l = parse_layout("Describe(Find(person))");
    CHECK(l.kind == ModuleKind::kDescribe);
    REQUIRE(l.children.size() == 1);
    CHECK(l.children[0].kind == ModuleKind::kFind);
    CHECK(l.children[0].word == "person");

    // Case-insensitive names, words lowercased, whitespace tolerated.
    Layout m = parse_layout("  describe( AND( find(Person) , FIND(Playing) ) ) ");
    CHECK(print_layout(m) == "Describe(And(Find(person), Find(playing)))");
}

TEST_CASE("parse_layout rejects malformed input with positions") {
    CHECK_THROWS_AS(parse_layout("And(Find(a))"), FormatError);
    CHECK_THROWS_AS(parse_layout("Describe(Find(person)"), FormatError);
    CHECK_THROWS_AS(parse_layout("Blend(Find(a))"), FormatError);
    CHECK_THROWS_AS(parse_layout("Describe(Find(person)))"), FormatError);
    CHECK_THROWS_AS(parse_layout(""), FormatError);

    try {
        parse_layout("And(Find(a))");
        FAIL("expected arity error");
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("And takes 2") != std::string::npos);
        CHECK(msg.find("position") != std::string::npos);
    }
}

TEST_CASE("print then parse is the identity on random layouts") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 50; ++i) {
        Layout l = random_root(rng);
        const std::string text = print_layout(l);
        CHECK(print_layout(parse_layout(text)) == text);
    }
}

TEST_CASE("type_check accepts well-typed layouts") {
    CHECK_NOTHROW(type_check(parse_layout("Describe(Find(w))")));
    CHECK_NOTHROW(type_check(parse_layout("Measure(And(Find(a), Find(b)))")));
    CHECK_NOTHROW(type_check(parse_layout("Describe(And(And(Find(a), Find(b)), Find(c)))")));
}

TEST_CASE("type_check reports the offending node and ports") {
    // Measure over Describe: child produces LabelScores, not AttentionMap.
    Layout bad{ModuleKind::kMeasure, "", {}};
    bad.children.push_back(parse_layout("Describe(Find(w))"));
    try {
        type_check(bad);
        FAIL("expected type error");
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("root/0") != std::string::npos);
        CHECK(msg.find("AttentionMap") != std::string::npos);
        CHECK(msg.find("LabelScores") != std::string::npos);
    }

    // Bare Find at the root produces AttentionMap, not LabelScores.
    CHECK_THROWS_AS(type_check(Layout{ModuleKind::kFind, "w", {}}), FormatError);

    // Hand-built arity violation.
    Layout onearm{ModuleKind::kAnd, "", {}};
    onearm.children.push_back(Layout{ModuleKind::kFind, "w", {}});
    CHECK_THROWS_AS(type_check(onearm), FormatError);
}

TEST_CASE("top_module_policy") {
    TopPolicy off;
    CHECK(top_module_policy({"what", "color", "is", "the", "sign"}, off) == ModuleKind::kDescribe);
    CHECK(top_module_policy({"how", "many", "planes"}, off) == ModuleKind::kDescribe);

    TopPolicy count{true, false};
    CHECK(top_module_policy({"how", "many", "planes", "are", "flying"}, count) ==
          ModuleKind::kMeasure);
    CHECK(top_module_policy({"what", "color", "is", "the", "sign"}, count) ==
          ModuleKind::kDescribe);

    TopPolicy yesno{false, true};
    CHECK(top_module_policy({"is", "there", "a", "tree", "on", "the", "desk"}, yesno) ==
          ModuleKind::kMeasure);
    CHECK(top_module_policy({"how", "many", "planes"}, yesno) == ModuleKind::kDescribe);
}

TEST_CASE("compile_from_parse: person/playing short and longest") {
    const auto parse = person_playing_parse();
    Layout s = compile_from_parse(parse, ParseMode::kShort, TopModule::kAuto);
    CHECK(print_layout(s) == "Describe(Find(person))");

    Layout l = compile_from_parse(parse, ParseMode::kLongest, TopModule::kAuto);
    CHECK(print_layout(l) == "Describe(And(Find(person), Find(playing)))");
}

TEST_CASE("compile_from_parse: counting questions with the measure policy") {
    const auto parse = planes_flying_parse();
    TopPolicy count{true, false};
    Layout s = compile_from_parse(parse, ParseMode::kShort, TopModule::kAuto, count);
    CHECK(print_layout(s) == "Measure(Find(planes))");
    Layout l = compile_from_parse(parse, ParseMode::kLongest, TopModule::kAuto, count);
    CHECK(print_layout(l) == "Measure(And(Find(planes), Find(flying)))");

    // Policy off: Describe on top, same body.
    Layout d = compile_from_parse(parse, ParseMode::kLongest, TopModule::kAuto);
    CHECK(print_layout(d) == "Describe(And(Find(planes), Find(flying)))");

    // Forced top module overrides the policy.
    Layout f = compile_from_parse(parse, ParseMode::kShort, TopModule::kMeasure);
    CHECK(print_layout(f) == "Measure(Find(planes))");
}

TEST_CASE("compile_from_parse: prepositional tokens contribute their noun dependent") {
    // "is there a tree on the desk"; no wh token, so "is" anchors the search.
    std::vector<DepToken> parse = {
        tok(1, "is", 4, "cop", Pos::kOther),  tok(2, "there", 4, "expl", Pos::kOther),
        tok(3, "a", 4, "det", Pos::kOther),   tok(4, "tree", 0, "root", Pos::kNoun),
        tok(5, "on", 4, "case", Pos::kAdp),   tok(6, "the", 7, "det", Pos::kOther),
        tok(7, "desk", 5, "nmod", Pos::kNoun),
    };
    TopPolicy yesno{false, true};
    Layout l = compile_from_parse(parse, ParseMode::kLongest, TopModule::kAuto, yesno);
    CHECK(print_layout(l) == "Measure(And(Find(tree), Find(desk)))");
    Layout s = compile_from_parse(parse, ParseMode::kShort, TopModule::kAuto, yesno);
    CHECK(print_layout(s) == "Measure(Find(tree))");
}

TEST_CASE("compile_from_parse: falls back to the nearest noun outside the radius") {
    // Only verbs near the wh token; the noun sits three hops away.
    std::vector<DepToken> parse = {
        tok(1, "what", 2, "dobj", Pos::kWh),      tok(2, "happened", 0, "root", Pos::kVerb),
        tok(3, "during", 2, "case", Pos::kOther), tok(4, "the", 6, "det", Pos::kOther),
        tok(5, "big", 6, "amod", Pos::kOther),    tok(6, "storm", 3, "nmod", Pos::kNoun),
    };
    // storm: what -> happened -> during -> storm = 3 hops, outside the radius.
    Layout s = compile_from_parse(parse, ParseMode::kShort, TopModule::kAuto);
    CHECK(print_layout(s) == "Describe(Find(storm))");
    Layout l = compile_from_parse(parse, ParseMode::kLongest, TopModule::kAuto);
    CHECK(print_layout(l) == "Describe(And(Find(happened), Find(storm)))");
}

TEST_CASE("compile_from_parse rejects nounless questions") {
    std::vector<DepToken> parse = {
        tok(1, "what", 2, "dobj", Pos::kWh),
        tok(2, "happened", 0, "root", Pos::kVerb),
    };
    CHECK_THROWS_WITH_AS(compile_from_parse(parse, ParseMode::kShort, TopModule::kAuto),
                         "uncompilable question: no noun present", FormatError);
}

TEST_CASE("compile_from_parse is deterministic and short is a subset of longest") {
    const auto parses = {person_playing_parse(), planes_flying_parse()};
    for (const auto& p : parses) {
        Layout a = compile_from_parse(p, ParseMode::kLongest, TopModule::kAuto);
        Layout b = compile_from_parse(p, ParseMode::kLongest, TopModule::kAuto);
        CHECK(print_layout(a) == print_layout(b));

        Layout s = compile_from_parse(p, ParseMode::kShort, TopModule::kAuto);
        CHECK(print_layout(a).find("Find(" + s.children[0].word + ")") != std::string::npos);
        CHECK_NOTHROW(type_check(a));
        CHECK_NOTHROW(type_check(s));
    }
}

TEST_CASE("dep parse round trip through the text format") {
    const auto orig = person_playing_parse();
    std::stringstream ss(write_dep_parse(orig) + "\n" + write_dep_parse(planes_flying_parse()));
    auto sentences = read_dep_parses(ss);
    REQUIRE(sentences.size() == 2);
    REQUIRE(sentences[0].size() == 5);
    CHECK(sentences[0][3].form == "person");
    CHECK(sentences[0][3].pos == Pos::kNoun);
    CHECK(sentences[0][4].head == 0);
    CHECK(sentences[1][0].form == "how");

    std::stringstream bad("1\tword\t0\troot\n");
    CHECK_THROWS_AS(read_dep_parses(bad), FormatError);
    std::stringstream badpos("1\tword\t0\troot\tNOUNX\n");
    CHECK_THROWS_AS(read_dep_parses(badpos), FormatError);
}
